"""Strength index, precision/recall and spatio-temporal matching."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

from .model import Event, GeoPoint


class ZeroPostCount(ValueError):
    pass


class NoDetections(ValueError):
    pass


class NoTruthEvents(ValueError):
    pass


@dataclass(frozen=True)
class TruthEvent:
    id: str
    epicenter: GeoPoint
    start_ts: int
    end_ts: int
    label_entities: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.start_ts < self.end_ts:
            raise ValueError(f"truth event {self.id}: start must precede end")


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float | None
    recall: float | None
    si: list[float] = field(default_factory=list)
    mean_si: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def strength_index(post_count: int, top_counts: Sequence[int]) -> float:
    """Summed top-entity post counts over the event's post count."""
    if post_count <= 0:
        raise ZeroPostCount("strength index needs at least one post")
    return sum(top_counts) / post_count


def precision(tp: int, fp: int) -> float:
    if tp + fp <= 0:
        raise NoDetections("precision is undefined without detections")
    return tp / (tp + fp)


def recall(tp: int, fn: int) -> float:
    if tp + fn <= 0:
        raise NoTruthEvents("recall is undefined without truth events")
    return tp / (tp + fn)


def _matches(d: Event, g: TruthEvent) -> bool:
    return d.bbox.contains(g.epicenter.lat, g.epicenter.lon, closed=True) and (
        d.start_ts < g.end_ts and g.start_ts < d.end_ts
    )


def match_events(detected: Sequence[Event], truth: Sequence[TruthEvent]):
    """Greedy one-to-one matching, strongest detection first.

    Returns ``(tp, fp, fn, matching)`` with ``matching`` a list of
    ``(detected_index, truth_id)`` pairs.  Each detection takes the
    earliest-starting unmatched truth event it covers (ties by id), so the
    result does not depend on the order of ``truth``.
    """
    order = sorted(
        range(len(detected)),
        key=lambda i: (-detected[i].signal, -detected[i].post_count, detected[i].start_ts, detected[i].region_path, i),
    )
    pool = sorted(truth, key=lambda g: (g.start_ts, g.id))
    taken: set[str] = set()
    matching = []
    for i in order:
        for g in pool:
            if g.id not in taken and _matches(detected[i], g):
                taken.add(g.id)
                matching.append((i, g.id))
                break
    tp = len(matching)
    return tp, len(detected) - tp, len(truth) - tp, matching


def evaluate(detected: Sequence[Event], truth: Sequence[TruthEvent]) -> EvalReport:
    tp, fp, fn, _ = match_events(detected, truth)
    si = [e.si_value for e in detected]
    return EvalReport(
        tp=tp,
        fp=fp,
        fn=fn,
        precision=precision(tp, fp) if tp + fp else None,
        recall=recall(tp, fn) if tp + fn else None,
        si=si,
        mean_si=sum(si) / len(si) if si else None,
    )
