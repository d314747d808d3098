"""Readers and writers for posts, events, truth, POI lists and reports.

Posts, events and truth are JSON lines (UTF-8, LF).  Reals in event
records are written with 9 significant digits so reruns diff cleanly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator

from .baselines.poi import Poi
from .metrics import EvalReport, TruthEvent
from .model import BoundingBox, Event, GeoPoint, Post, ValidationError, validate_post


class MalformedInput(ValueError):
    pass


def _r(x: float) -> float:
    return float(f"{x:.9g}")


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _open_w(path) -> IO[str]:
    return open(path, "w", encoding="utf-8", newline="\n")


# -- posts -----------------------------------------------------------------


def post_to_dict(p: Post) -> dict:
    return {"id": p.id, "ts": p.ts, "lat": p.lat, "lon": p.lon, "entities": list(p.entities)}


def write_posts(posts: Iterable[Post], path) -> None:
    with _open_w(path) as fh:
        for p in posts:
            fh.write(_dumps(post_to_dict(p)) + "\n")


@dataclass
class LoadStats:
    total: int = 0
    invalid: int = 0

    @property
    def invalid_frac(self) -> float:
        return self.invalid / self.total if self.total else 0.0


def iter_posts(path, stats: LoadStats | None = None) -> Iterator[Post]:
    """Valid posts from a JSONL file; malformed lines are counted and skipped."""
    stats = stats if stats is not None else LoadStats()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            stats.total += 1
            try:
                yield validate_post(json.loads(line))
            except (json.JSONDecodeError, ValidationError, TypeError, AttributeError):
                stats.invalid += 1


def load_posts(path, max_invalid_frac: float = 0.01) -> tuple[list[Post], LoadStats]:
    stats = LoadStats()
    posts = list(iter_posts(path, stats))
    if stats.invalid_frac > max_invalid_frac:
        raise MalformedInput(
            f"{stats.invalid} of {stats.total} records invalid "
            f"({stats.invalid_frac:.2%} > {max_invalid_frac:.2%})"
        )
    return posts, stats


# -- events ----------------------------------------------------------------


def event_to_dict(e: Event) -> dict:
    return {
        "detector": e.detector,
        "region_path": e.region_path,
        "bbox": [_r(v) for v in e.bbox.as_tuple()],
        "start_ts": e.start_ts,
        "end_ts": e.end_ts,
        "period_s": e.period_s,
        "post_count": e.post_count,
        "signal": _r(e.signal),
        "signal_kind": e.meta.get("signal_kind", "smoothed"),
        "si": _r(e.si_value),
        "top_entities": [[k, c] for k, c in e.top_entities],
        "post_ids": list(e.post_ids),
    }


def event_from_dict(d: dict) -> Event:
    return Event(
        region_path=d["region_path"],
        bbox=BoundingBox(*d["bbox"]),
        start_ts=int(d["start_ts"]),
        end_ts=int(d["end_ts"]),
        period_s=int(d["period_s"]),
        post_ids=tuple(d["post_ids"]),
        post_count=int(d["post_count"]),
        signal=float(d["signal"]),
        top_entities=tuple((k, int(c)) for k, c in d.get("top_entities", ())),
        si_value=float(d.get("si", 0.0)),
        detector=d.get("detector", "quadtree"),
        meta={"signal_kind": d.get("signal_kind", "smoothed")},
    )


def quantized(e: Event) -> Event:
    """The event as it reads back from an events file."""
    return event_from_dict(event_to_dict(e))


def write_events(events: Iterable[Event], fh: IO[str]) -> int:
    n = 0
    for e in events:
        fh.write(_dumps(event_to_dict(e)) + "\n")
        n += 1
    return n


def save_events(events: Iterable[Event], path) -> int:
    with _open_w(path) as fh:
        return write_events(events, fh)


def load_events(path) -> list[Event]:
    with open(path, encoding="utf-8") as fh:
        return [event_from_dict(json.loads(line)) for line in fh if line.strip()]


# -- truth -----------------------------------------------------------------


def save_truth(truth: Iterable[TruthEvent], path) -> None:
    with _open_w(path) as fh:
        for g in truth:
            rec = {
                "id": g.id,
                "lat": g.epicenter.lat,
                "lon": g.epicenter.lon,
                "start_ts": g.start_ts,
                "end_ts": g.end_ts,
                "entities": list(g.label_entities),
            }
            fh.write(_dumps(rec) + "\n")


def load_truth(path) -> list[TruthEvent]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            out.append(
                TruthEvent(
                    str(d["id"]),
                    GeoPoint(float(d["lat"]), float(d["lon"])),
                    int(d["start_ts"]),
                    int(d["end_ts"]),
                    tuple(d.get("entities", ())),
                )
            )
    return out


# -- POIs and reports ------------------------------------------------------


def load_pois(path) -> list[Poi]:
    """``name,lat,lon`` per line; blank lines, ``#`` comments and a header
    row are skipped."""
    pois = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 3:
                raise MalformedInput(f"POI line needs name,lat,lon: {row!r}")
            name, lat, lon = (c.strip() for c in row)
            try:
                pois.append(Poi(name, GeoPoint(float(lat), float(lon))))
            except ValueError:
                if not pois and name.lower() == "name":
                    continue
                raise MalformedInput(f"bad POI coordinates: {row!r}") from None
    return pois


def save_report(report: EvalReport, path) -> None:
    Path(path).write_text(report_json(report) + "\n", encoding="utf-8")


def report_json(report: EvalReport) -> str:
    d = report.to_dict()
    for k in ("precision", "recall", "mean_si"):
        if d[k] is not None:
            d[k] = _r(d[k])
    d["si"] = [_r(v) for v in d["si"]]
    return _dumps(d)
