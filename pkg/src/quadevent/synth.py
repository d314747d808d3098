"""Synthetic post streams with injected bursts and known ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geo import meters_to_degrees
from .metrics import TruthEvent
from .model import BoundingBox, GeoPoint, Post


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class Hotspot:
    center: GeoPoint
    weight: float
    spread_m: float


@dataclass(frozen=True)
class Burst:
    center: GeoPoint
    radius_m: float
    start_ts: int
    duration_s: int
    extra_posts: int
    entity_pool: tuple[str, ...]


@dataclass(frozen=True)
class SynthConfig:
    root_bbox: BoundingBox
    duration_s: int
    background_rate: float  # posts per hour over the whole box
    hotspots: tuple[Hotspot, ...] = ()
    uniform_weight: float = 0.2
    bursts: tuple[Burst, ...] = ()
    background_entity_pool: int = 5000
    burst_entities_per_post: int = 3
    start_ts: int = 0
    seed: int = 0
    id_prefix: str = "p"

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise InvalidConfig("duration must be positive")
        if self.background_rate < 0 or self.uniform_weight < 0:
            raise InvalidConfig("rates and weights must be non-negative")
        if any(h.weight < 0 or h.spread_m <= 0 for h in self.hotspots):
            raise InvalidConfig("hotspot weights must be >= 0 and spreads > 0")
        if self.background_rate > 0 and self.uniform_weight + sum(h.weight for h in self.hotspots) <= 0:
            raise InvalidConfig("background mixture has zero total weight")
        end = self.start_ts + self.duration_s
        for b in self.bursts:
            if b.extra_posts < 0 or b.radius_m <= 0 or b.duration_s <= 0:
                raise InvalidConfig("burst needs positive radius/duration and non-negative size")
            if b.start_ts < self.start_ts or b.start_ts + b.duration_s > end:
                raise InvalidConfig("burst window outside the stream duration")
            if not self.root_bbox.contains(b.center.lat, b.center.lon, closed=True):
                raise InvalidConfig("burst center outside the root box")
            if not _disk_inside(self.root_bbox, b.center, b.radius_m):
                raise InvalidConfig("burst disk crosses the root box edge")
            if b.extra_posts and len(b.entity_pool) < self.burst_entities_per_post:
                raise InvalidConfig("burst entity pool smaller than entities per post")


def _disk_inside(box: BoundingBox, c: GeoPoint, r_m: float) -> bool:
    dlat, dlon = meters_to_degrees(c.lat, r_m, r_m)
    return (
        box.min_lat <= c.lat - dlat and c.lat + dlat <= box.max_lat
        and box.min_lon <= c.lon - dlon and c.lon + dlon <= box.max_lon
    )


def _background_points(rng, cfg: SynthConfig, n: int):
    box = cfg.root_bbox
    weights = np.array([cfg.uniform_weight] + [h.weight for h in cfg.hotspots], dtype=np.float64)
    comp = rng.choice(len(weights), size=n, p=weights / weights.sum())
    lat = np.empty(n)
    lon = np.empty(n)
    for j in range(len(weights)):
        idx = np.flatnonzero(comp == j)
        todo = idx
        while len(todo):
            if j == 0:
                la = rng.uniform(box.min_lat, box.max_lat, len(todo))
                lo = rng.uniform(box.min_lon, box.max_lon, len(todo))
            else:
                h = cfg.hotspots[j - 1]
                sd_lat, sd_lon = meters_to_degrees(h.center.lat, h.spread_m, h.spread_m)
                la = rng.normal(h.center.lat, sd_lat, len(todo))
                lo = rng.normal(h.center.lon, sd_lon, len(todo))
            lat[todo] = la
            lon[todo] = lo
            inside = (la >= box.min_lat) & (la <= box.max_lat) & (lo >= box.min_lon) & (lo <= box.max_lon)
            todo = todo[~inside]
    return lat, lon


def generate(cfg: SynthConfig) -> tuple[list[Post], list[TruthEvent]]:
    """Background Poisson stream plus bursts; posts sorted by timestamp."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n_bg = int(rng.poisson(cfg.background_rate * cfg.duration_s / 3600.0))
    ts = rng.integers(cfg.start_ts, cfg.start_ts + cfg.duration_s, n_bg)
    lat, lon = _background_points(rng, cfg, n_bg)
    n_ent = rng.integers(0, 3, n_bg)
    records = []
    for k in range(n_bg):
        ents = tuple(f"#t{e}" for e in sorted(set(rng.integers(0, cfg.background_entity_pool, n_ent[k]).tolist())))
        records.append((int(ts[k]), float(lat[k]), float(lon[k]), ents))

    truth = []
    for b_i, b in enumerate(cfg.bursts):
        m = b.extra_posts
        r = b.radius_m * np.sqrt(rng.uniform(0.0, 1.0, m))
        theta = rng.uniform(0.0, 2 * math.pi, m)
        dlat, dlon = meters_to_degrees(b.center.lat, r * np.sin(theta), r * np.cos(theta))
        bts = rng.integers(b.start_ts, b.start_ts + b.duration_s, m)
        for k in range(m):
            picks = rng.choice(len(b.entity_pool), size=cfg.burst_entities_per_post, replace=False)
            ents = tuple(b.entity_pool[i] for i in sorted(picks.tolist()))
            records.append((int(bts[k]), float(b.center.lat + dlat[k]), float(b.center.lon + dlon[k]), ents))
        truth.append(TruthEvent(f"burst-{b_i}", b.center, b.start_ts, b.start_ts + b.duration_s, tuple(b.entity_pool)))

    records.sort(key=lambda r: r[0])
    posts = [Post(f"{cfg.id_prefix}{i}", t, la, lo, e) for i, (t, la, lo, e) in enumerate(records)]
    return posts, truth


def box_around(center: GeoPoint, width_km: float, height_km: float | None = None) -> BoundingBox:
    height_km = width_km if height_km is None else height_km
    dlat, dlon = meters_to_degrees(center.lat, height_km * 500.0, width_km * 500.0)
    return BoundingBox(center.lat - dlat, center.lon - dlon, center.lat + dlat, center.lon + dlon)


MELBOURNE = GeoPoint(-37.8136, 144.9631)


def default_scenario(
    seed: int,
    n_bursts: int = 10,
    burst_posts: int = 60,
    burst_minutes: int = 60,
    burst_radius_m: float = 100.0,
    background_rate: float = 120.0,
    days: float = 7.0,
    warmup_days: float = 3.0,
    start_ts: int = 1_483_228_800,
    center: GeoPoint = MELBOURNE,
) -> SynthConfig:
    """A 20 km x 20 km city box with three hotspots and bursts after warm-up.

    Burst placement is drawn from ``seed`` as well, so one seed fixes the
    whole scenario.
    """
    box = box_around(center, 20.0)
    rng = np.random.default_rng([seed, 0x5EED])
    hotspots = (
        Hotspot(center, 0.45, 1500.0),
        Hotspot(GeoPoint(*_shift(center, 3500.0, -4000.0)), 0.2, 1000.0),
        Hotspot(GeoPoint(*_shift(center, -5000.0, 2500.0)), 0.15, 2000.0),
    )
    duration = int(days * 86400)
    first = start_ts + int(warmup_days * 86400) + 3600
    last = start_ts + duration - burst_minutes * 60 - 6 * 3600
    margin_m = 1000.0
    bursts = []
    for i in range(n_bursts):
        north, east = rng.uniform(-10_000 + margin_m, 10_000 - margin_m, 2)
        c = GeoPoint(*_shift(center, north, east))
        t0 = int(rng.integers(first, last)) // 60 * 60
        pool = tuple(f"#event{i}_{j}" for j in range(4))
        bursts.append(Burst(c, burst_radius_m, t0, burst_minutes * 60, burst_posts, pool))
    return SynthConfig(
        root_bbox=box,
        duration_s=duration,
        background_rate=background_rate,
        hotspots=hotspots,
        uniform_weight=0.2,
        bursts=tuple(bursts),
        start_ts=start_ts,
        seed=seed,
    )


def _shift(c: GeoPoint, north_m: float, east_m: float) -> tuple[float, float]:
    dlat, dlon = meters_to_degrees(c.lat, north_m, east_m)
    return float(c.lat + dlat), float(c.lon + dlon)


def year_scenario(seed: int, total_posts: int = 200_000, n_bursts: int = 50, days: int = 365) -> SynthConfig:
    """Benchmark-scale stream: about ``total_posts`` posts over ``days``."""
    base = default_scenario(seed, n_bursts=0, days=days)
    burst_posts = 60
    rate = (total_posts - n_bursts * burst_posts) / (days * 24.0)
    rng = np.random.default_rng([seed, 0xB0057])
    center = MELBOURNE
    bursts = []
    for i in range(n_bursts):
        north, east = rng.uniform(-9_000, 9_000, 2)
        t0 = int(rng.integers(base.start_ts + 4 * 86400, base.start_ts + base.duration_s - 86400)) // 60 * 60
        pool = tuple(f"#event{i}_{j}" for j in range(4))
        bursts.append(Burst(GeoPoint(*_shift(center, north, east)), 100.0, t0, 3600, burst_posts, pool))
    return SynthConfig(
        root_bbox=base.root_bbox,
        duration_s=base.duration_s,
        background_rate=rate,
        hotspots=base.hotspots,
        uniform_weight=base.uniform_weight,
        bursts=tuple(bursts),
        start_ts=base.start_ts,
        seed=seed,
    )
