"""Incremental circle/union clustering baseline.

Every tick, the posts active in ``[t_c - gap, t_c]`` each define a circle:
the active posts within ``R`` of it.  Two circles are connected when they
share at least ``K`` posts; a union is a connected component of circles and
its members are all posts of its circles.  Unions with at least ``N``
members are significant.  Union ids persist across ticks by
largest-overlap matching.
"""

from __future__ import annotations

import bisect
import math
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..detector import top_entities
from ..geo import EARTH_RADIUS_M
from ..metrics import strength_index
from ..model import BoundingBox, Event, Post

# degenerate member boxes are padded by this many degrees per side
BBOX_PAD_DEG = 1e-6


@dataclass(frozen=True)
class ClusterParams:
    tick: int = 600
    temporal_gap: int = 3 * 3600
    radius_km: float = 0.25
    k_overlap: int = 2
    min_size: int = 5

    def __post_init__(self):
        if min(self.tick, self.temporal_gap, self.radius_km, self.k_overlap, self.min_size) <= 0:
            raise ValueError("cluster parameters must all be positive")


@dataclass(frozen=True)
class Union:
    union_id: int
    member_post_ids: frozenset[str]
    first_ts: int
    last_ts: int
    members: tuple[Post, ...] = field(default=(), compare=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.member_post_ids)


def _unit_vectors(posts: Sequence[Post]) -> np.ndarray:
    lat = np.radians([p.lat for p in posts])
    lon = np.radians([p.lon for p in posts])
    c = np.cos(lat)
    return np.column_stack([c * np.cos(lon), c * np.sin(lon), np.sin(lat)])


def circle_adjacency(posts: Sequence[Post], radius_km: float) -> csr_matrix:
    """Boolean matrix with ``A[i, j]`` set iff post j lies in circle i
    (great-circle distance <= R), diagonal included."""
    n = len(posts)
    chord = 2.0 * math.sin(radius_km * 1000.0 / (2.0 * EARTH_RADIUS_M))
    pairs = cKDTree(_unit_vectors(posts)).query_pairs(chord, output_type="ndarray")
    rows = np.concatenate([pairs[:, 0], pairs[:, 1], np.arange(n)])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0], np.arange(n)])
    data = np.ones(len(rows), dtype=np.int32)
    return coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def union_members(posts: Sequence[Post], params: ClusterParams) -> list[np.ndarray]:
    """Member index arrays of every union (significant or not), ordered by
    their smallest member index."""
    n = len(posts)
    if n == 0:
        return []
    A = circle_adjacency(posts, params.radius_km)
    shared = (A @ A).tocoo()
    keep = (shared.data >= params.k_overlap) & (shared.row != shared.col)
    graph = coo_matrix((np.ones(keep.sum(), dtype=np.int8), (shared.row[keep], shared.col[keep])), shape=(n, n))
    n_comp, labels = connected_components(graph, directed=False)
    ind = coo_matrix((np.ones(n, dtype=np.int32), (labels, np.arange(n))), shape=(n_comp, n)).tocsr()
    cover = (ind @ A).tocsr()
    out = [np.sort(cover.indices[cover.indptr[c] : cover.indptr[c + 1]]) for c in range(n_comp)]
    out.sort(key=lambda m: int(m[0]))
    return out


def _assign_ids(sets: list[frozenset[str]], prev: Sequence[Union], next_id: int) -> tuple[list[int], int]:
    pairs = []
    for i, s in enumerate(sets):
        for u in prev:
            ov = len(s & u.member_post_ids)
            if ov:
                pairs.append((-ov, u.union_id, i))
    pairs.sort()
    ids: list[int | None] = [None] * len(sets)
    used = set()
    for _, uid, i in pairs:
        if ids[i] is None and uid not in used:
            ids[i] = uid
            used.add(uid)
    for i in range(len(sets)):
        if ids[i] is None:
            ids[i] = next_id
            next_id += 1
    return ids, next_id


def cluster_tick(
    active: Sequence[Post],
    params: ClusterParams,
    prev_unions: Sequence[Union] = (),
    next_id: int | None = None,
) -> list[Union]:
    """Significant unions among the active posts of one tick.

    An id is inherited from the previous union with the largest member
    overlap (ties to the older, i.e. smaller, id); otherwise a fresh id
    starting at ``next_id`` (default: one past the largest previous id).
    """
    if next_id is None:
        next_id = max((u.union_id for u in prev_unions), default=-1) + 1
    groups = [m for m in union_members(active, params) if len(m) >= params.min_size]
    sets = [frozenset(active[j].id for j in m) for m in groups]
    ids, _ = _assign_ids(sets, prev_unions, next_id)
    out = []
    for uid, m, s in zip(ids, groups, sets):
        members = tuple(active[j] for j in m)
        ts = [p.ts for p in members]
        out.append(Union(uid, s, min(ts), max(ts), members))
    return out


class ClusterDetector:
    """Runs :func:`cluster_tick` every ``tick`` seconds over a sorted stream
    and records every significant-union snapshot."""

    def __init__(self, params: ClusterParams):
        self.params = params
        self.snapshots: list[tuple[int, Union]] = []
        self._next_id = 0

    def run(self, posts: Sequence[Post]) -> list[tuple[int, Union]]:
        if not posts:
            return self.snapshots
        p = self.params
        ts = [q.ts for q in posts]
        if any(a > b for a, b in zip(ts, ts[1:])):
            order = sorted(range(len(posts)), key=lambda i: ts[i])
            posts = [posts[i] for i in order]
            ts = [ts[i] for i in order]
        tc = -(-ts[0] // p.tick) * p.tick
        last = ts[-1]
        prev: list[Union] = []
        span = None
        while tc - p.temporal_gap <= last:
            lo = bisect.bisect_left(ts, tc - p.temporal_gap)
            hi = bisect.bisect_right(ts, tc)
            if (lo, hi) != span:
                active = posts[lo:hi]
                prev = cluster_tick(active, p, prev, self._next_id)
                self._next_id = max([self._next_id - 1] + [u.union_id for u in prev]) + 1
                span = (lo, hi)
            self.snapshots.extend((tc, u) for u in prev)
            tc += p.tick
        return self.snapshots


def _members_bbox(members: Sequence[Post]) -> BoundingBox:
    lats = [m.lat for m in members]
    lons = [m.lon for m in members]
    lo_lat, hi_lat, lo_lon, hi_lon = min(lats), max(lats), min(lons), max(lons)
    if hi_lat - lo_lat <= 0:
        lo_lat, hi_lat = lo_lat - BBOX_PAD_DEG, hi_lat + BBOX_PAD_DEG
    if hi_lon - lo_lon <= 0:
        lo_lon, hi_lon = lo_lon - BBOX_PAD_DEG, hi_lon + BBOX_PAD_DEG
    return BoundingBox(lo_lat, lo_lon, hi_lat, hi_lon)


def dedupe_unions(all_ticks: Iterable[tuple[int, Union]], k: int = 5) -> list[Event]:
    """One event per union id: its largest snapshot (ties: earliest tick)."""
    best: dict[int, tuple[int, int, Union]] = {}
    for tick, u in all_ticks:
        cur = best.get(u.union_id)
        if cur is None or (-u.size, tick) < (-cur[2].size, cur[0]):
            best[u.union_id] = (tick, u.size, u)
    events = []
    for uid in sorted(best):
        tick, _, u = best[uid]
        members = sorted(u.members, key=lambda m: (m.ts, m.id))
        top = top_entities(None, members, k)
        n = len(u.member_post_ids)
        # member span [first_ts, last_ts] as a half-open interval
        events.append(
            Event(
                region_path=f"union:{uid}",
                bbox=_members_bbox(members),
                start_ts=u.first_ts,
                end_ts=u.last_ts + 1,
                period_s=u.last_ts + 1 - u.first_ts,
                post_ids=tuple(m.id for m in members) or tuple(sorted(u.member_post_ids)),
                post_count=n,
                signal=0.0,
                top_entities=tuple(top),
                si_value=strength_index(n, [c for _, c in top]),
                detector="cluster",
                meta={"tick": tick, "posts": tuple(members)},
            )
        )
    events.sort(key=lambda e: (e.start_ts, e.region_path))
    return events


def cluster_detect(posts: Sequence[Post], params: ClusterParams, k: int = 5) -> list[Event]:
    return dedupe_unions(ClusterDetector(params).run(posts), k)


SWEEP_GRID = (
    tuple(m * 60 for m in (30, 50, 60, 90, 120, 150, 180)),
    ((2, 5), (5, 10), (10, 15)),
)


def sweep(posts: Sequence[Post], base: ClusterParams, gaps=SWEEP_GRID[0], kn=SWEEP_GRID[1]) -> list[dict]:
    """Significant unions, unique events and runtime for each (gap, K, N)."""
    rows = []
    for gap, (k, n) in product(gaps, kn):
        p = ClusterParams(base.tick, gap, base.radius_km, k, n)
        t0 = time.perf_counter()
        snaps = ClusterDetector(p).run(posts)
        events = dedupe_unions(snaps)
        rows.append(
            {
                "gap_min": gap // 60,
                "k": k,
                "n": n,
                "significant_unions": len(snaps),
                "unique_events": len(events),
                "runtime_s": round(time.perf_counter() - t0, 3),
            }
        )
    return rows
