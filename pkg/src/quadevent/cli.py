"""Command-line entry point: detect, generate, evaluate, baselines, sweep, bench."""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
import tempfile
import time
from contextlib import contextmanager
from dataclasses import fields, replace
from pathlib import Path
from typing import IO, Sequence

from . import formats
from .baselines.cluster import cluster_detect, sweep
from .baselines.poi import PoiDetector
from .config import Config, ConfigError, load_config
from .formats import LoadStats, MalformedInput
from .metrics import evaluate
from .pipeline import QuadTreeDetector
from .synth import default_scenario, generate, year_scenario

log = logging.getLogger("quadevent")

LOG_ENV = "QUADEVENT_LOG_LEVEL"


@contextmanager
def _output(path) -> IO[str]:
    if path in (None, "", "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _check_invalid(stats: LoadStats, cfg: Config, out_path) -> None:
    if stats.invalid:
        log.warning("%d of %d records invalid and skipped", stats.invalid, stats.total)
    if stats.invalid_frac > cfg.max_invalid_frac:
        if out_path not in (None, "", "-"):
            Path(out_path).unlink(missing_ok=True)
        raise MalformedInput(
            f"{stats.invalid} of {stats.total} records invalid "
            f"({stats.invalid_frac:.2%} > {cfg.max_invalid_frac:.2%}); input rejected"
        )


def _stream_detector(cfg: Config, detector, posts_path, events_path) -> dict:
    stats = LoadStats()
    t0 = time.perf_counter()
    with _output(events_path) as fh:
        n = formats.write_events(detector.run(formats.iter_posts(posts_path, stats)), fh)
    elapsed = time.perf_counter() - t0
    _check_invalid(stats, cfg, events_path)
    info = {
        "posts": stats.total - stats.invalid,
        "invalid": stats.invalid,
        "outside": detector.dropped,
        "late": detector.late,
        "intervals": detector.intervals,
        "events": n,
        "seconds": elapsed,
    }
    log.info("%s: %s", detector.name, info)
    return info


def run_detect(cfg: Config, posts_path, events_path) -> dict:
    det = QuadTreeDetector(
        cfg.detector_params(),
        cfg.bbox(),
        theta_count=cfg.theta_count,
        theta_area=cfg.theta_area,
        suppress_warmup=cfg.suppress_warmup,
        slack=cfg.slack,
    )
    return _stream_detector(cfg, det, posts_path, events_path)


def scenario_for(cfg: Config, year: bool = False, total_posts: int = 200_000):
    if year:
        return year_scenario(cfg.seed, total_posts=total_posts)
    return default_scenario(
        cfg.seed,
        n_bursts=cfg.n_bursts,
        burst_posts=cfg.burst_posts,
        burst_minutes=cfg.burst_minutes,
        background_rate=cfg.background_rate,
        days=cfg.days,
    )


def run_generate(cfg: Config, posts_path, truth_path, config_out=None, year=False, total_posts=200_000) -> dict:
    scn = scenario_for(cfg, year, total_posts)
    posts, truth = generate(scn)
    formats.write_posts(posts, posts_path)
    if truth_path:
        formats.save_truth(truth, truth_path)
    if config_out:
        eff = replace(cfg, root_bbox=scn.root_bbox.as_tuple())
        Path(config_out).write_text(eff.dumps(), encoding="utf-8")
    log.info("generated %d posts, %d bursts, root box %s", len(posts), len(truth), scn.root_bbox.as_tuple())
    return {"posts": len(posts), "truth": len(truth), "root_bbox": scn.root_bbox.as_tuple()}


def run_evaluate(events_path, truth_path, report_path=None):
    report = evaluate(formats.load_events(events_path), formats.load_truth(truth_path))
    if report_path:
        formats.save_report(report, report_path)
    return report


def run_baseline(cfg: Config, posts_path, which: str, events_path, pois_path=None) -> dict:
    if which == "poi":
        path = pois_path or cfg.pois_path
        if not path:
            raise ConfigError("the poi baseline needs a POI file (--pois)")
        pois = formats.load_pois(path)
        if not pois:
            raise MalformedInput(f"POI file {path} holds no POIs")
        det = PoiDetector(cfg.detector_params(), pois, cfg.poi_cell, cfg.suppress_warmup, cfg.slack)
        return _stream_detector(cfg, det, posts_path, events_path)
    if which == "cluster":
        posts, stats = formats.load_posts(posts_path, cfg.max_invalid_frac)
        t0 = time.perf_counter()
        events = cluster_detect(posts, cfg.cluster_params(), cfg.k_top)
        with _output(events_path) as fh:
            formats.write_events(events, fh)
        info = {"posts": len(posts), "invalid": stats.invalid, "events": len(events), "seconds": time.perf_counter() - t0}
        log.info("cluster: %s", info)
        return info
    raise ConfigError(f"unknown baseline {which!r}")


def run_sweep(cfg: Config, posts_path) -> list[dict]:
    posts, _ = formats.load_posts(posts_path, cfg.max_invalid_frac)
    return sweep(posts, cfg.cluster_params())


def format_sweep(rows: Sequence[dict]) -> str:
    head = ("gap_min", "k", "n", "significant_unions", "unique_events", "runtime_s")
    lines = ["\t".join(head)]
    lines += ["\t".join(str(r[h]) for h in head) for r in rows]
    return "\n".join(lines) + "\n"


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_bench(cfg: Config, total_posts: int = 200_000, repeats: int = 2) -> dict:
    """Detect repeatedly on a synthetic year; report throughput and whether
    all outputs are byte-identical."""
    with tempfile.TemporaryDirectory() as tmp:
        posts_path = Path(tmp) / "posts.jsonl"
        gen = run_generate(cfg, posts_path, None, year=True, total_posts=total_posts)
        run_cfg = replace(cfg, root_bbox=gen["root_bbox"])
        digests, rates = [], []
        for i in range(repeats):
            out = Path(tmp) / f"events{i}.jsonl"
            info = run_detect(run_cfg, posts_path, out)
            digests.append(_digest(out))
            rates.append(info["posts"] / info["seconds"])
    return {
        "posts": gen["posts"],
        "events": info["events"],
        "posts_per_s": round(max(rates), 1),
        "identical": len(set(digests)) == 1,
        "sha256": digests[0],
    }


# -- argument handling -------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (overrides the config file)")
    g.add_argument("--config", metavar="FILE", default=argparse.SUPPRESS, help="flat key = value config file")
    g.add_argument("--print-config", action="store_true", default=argparse.SUPPRESS, help="print effective config and exit")
    g.add_argument("--set", metavar="KEY=VALUE", action="append", default=argparse.SUPPRESS, help="override any config key")
    for f in fields(Config):
        g.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name, metavar="V", default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quadevent", description="Streaming spatio-temporal event detection.")
    _add_config_flags(parser)
    sub = parser.add_subparsers(dest="command")

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_config_flags(p)
        return p

    p = cmd("detect", "run the quad-tree detector over a posts file")
    p.add_argument("posts", nargs="?")
    p.add_argument("-o", "--output", help="events file (default: stdout)")

    p = cmd("generate", "write a synthetic posts stream and its ground truth")
    p.add_argument("-o", "--output", help="posts file")
    p.add_argument("--truth", help="truth file")
    p.add_argument("--config-out", help="write the effective config, root box included")
    p.add_argument("--year", action="store_true", help="benchmark-scale year instead of the default week")
    p.add_argument("--total-posts", type=int, default=200_000)

    p = cmd("evaluate", "match events against ground truth")
    p.add_argument("events", nargs="?")
    p.add_argument("truth", nargs="?")
    p.add_argument("-o", "--output", help="report file (also printed)")

    p = cmd("baseline", "run a baseline detector")
    p.add_argument("which", choices=("poi", "cluster"))
    p.add_argument("posts", nargs="?")
    p.add_argument("-o", "--output", help="events file (default: stdout)")
    p.add_argument("--pois", help="POI file, one name,lat,lon per line")

    p = cmd("sweep", "cluster baseline over the (gap, K, N) grid")
    p.add_argument("posts", nargs="?")
    p.add_argument("-o", "--output", help="table file (default: stdout)")

    p = cmd("bench", "determinism and throughput on a synthetic year")
    p.add_argument("--total-posts", type=int, default=200_000)
    p.add_argument("--repeats", type=int, default=2)
    return parser


def config_from_args(ns: argparse.Namespace) -> Config:
    overrides = {}
    for item in getattr(ns, "set", None) or ():
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v
    for k, v in vars(ns).items():
        if k.startswith("cfg_"):
            overrides[k[4:]] = v
    return load_config(getattr(ns, "config", None), overrides)


def _need(value, what: str):
    if not value:
        raise ConfigError(f"missing {what}")
    return value


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get(LOG_ENV, "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if getattr(ns, "print_config", False):
            sys.stdout.write(cfg.dumps())
            return 0
        c = ns.command
        if c is None:
            parser.print_help(sys.stderr)
            return 2
        if c == "detect":
            run_detect(cfg, _need(ns.posts or cfg.posts_path, "posts file"), ns.output or cfg.events_path)
        elif c == "generate":
            run_generate(
                cfg,
                _need(ns.output or cfg.posts_path, "posts output (-o)"),
                ns.truth or cfg.truth_path,
                ns.config_out,
                ns.year,
                ns.total_posts,
            )
        elif c == "evaluate":
            report = run_evaluate(
                _need(ns.events or cfg.events_path, "events file"),
                _need(ns.truth or cfg.truth_path, "truth file"),
                ns.output or cfg.report_path,
            )
            print(formats.report_json(report))
        elif c == "baseline":
            run_baseline(cfg, _need(ns.posts or cfg.posts_path, "posts file"), ns.which, ns.output or cfg.events_path, ns.pois)
        elif c == "sweep":
            rows = run_sweep(cfg, _need(ns.posts or cfg.posts_path, "posts file"))
            with _output(ns.output) as fh:
                fh.write(format_sweep(rows))
        elif c == "bench":
            res = run_bench(cfg, ns.total_posts, ns.repeats)
            print(
                f"posts={res['posts']} events={res['events']} "
                f"throughput={res['posts_per_s']:.0f} posts/s identical={str(res['identical']).lower()} "
                f"sha256={res['sha256']}"
            )
            return 0 if res["identical"] else 1
    except ConfigError as e:
        print(f"quadevent: config error: {e}", file=sys.stderr)
        return 2
    except (MalformedInput, OSError, ValueError, KeyError) as e:
        print(f"quadevent: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
