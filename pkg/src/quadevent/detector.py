"""Poisson anomaly signal, smoothing, event merging and pruning."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .geo import area_sqkm
from .metrics import strength_index
from .model import Event, Interval, NodeState, Post
from .quadtree import LEVEL_OFFSET, paths_overlap

GC_THRESHOLD = 1e-6


@dataclass(frozen=True)
class DetectorParams:
    horizon: int = 3 * 24 * 3600
    dt: int = 600
    tau1: float = 0.01
    tau2: float = 0.4
    alpha: float = 0.5
    theta_duration: int = 50 * 60
    theta_entity: int = 2
    k_top: int = 5
    bursts_only: bool = False

    def __post_init__(self):
        if self.horizon <= 0 or self.dt <= 0:
            raise ValueError("horizon and dt must be positive")
        if not 0 < self.tau1 < 1 or not 0 < self.tau2 < 1:
            raise ValueError("tau1 and tau2 must lie in (0, 1)")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if self.theta_duration < 0 or self.theta_entity < 0 or self.k_top <= 0:
            raise ValueError("thresholds must be non-negative and k_top positive")


def arrival_rate(window_count: int, T: float, dt: float) -> float:
    """Expected posts per increment given the window count."""
    return window_count * dt / T


def poisson_pmf(c: int, lam: float) -> float:
    """Poisson probability of ``c`` arrivals at rate ``lam``, in log space."""
    if lam == 0.0:
        return 1.0 if c == 0 else 0.0
    return math.exp(-lam + c * math.log(lam) - math.lgamma(c + 1))


def poisson_pmf_array(c: np.ndarray, lam: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = -lam + c * np.log(lam) - gammaln(c + 1)
    # 0 * log(0) is nan; lam == 0 is the degenerate distribution at 0
    p = np.exp(logp)
    zero = lam == 0.0
    if zero.any():
        p[zero] = (c[zero] == 0).astype(np.float64)
    return p


def scaled_signal(p: float, tau1: float) -> float:
    return (tau1 - p) / tau1 if p < tau1 else 0.0


def smooth(f_prev: float, delta: float, alpha: float) -> float:
    return alpha * f_prev + (1.0 - alpha) * delta


def key_to_path(key: int) -> str:
    d = int(np.searchsorted(LEVEL_OFFSET, key, side="right")) - 1
    prefix = key - int(LEVEL_OFFSET[d])
    return np.base_repr(prefix, 4).zfill(d) if d else ""


class DetectorState:
    """Smoothed signal per region plus the currently open events.

    Region signals are kept as two sorted arrays (``keys``, ``f``) so that a
    whole interval updates with a few vectorized operations.  A region key is
    an int64 (see :data:`quadevent.quadtree.LEVEL_OFFSET`); baselines may use
    any non-negative integer ids.
    """

    def __init__(self, key_to_name=key_to_path):
        self.keys = np.zeros(0, dtype=np.int64)
        self.f = np.zeros(0, dtype=np.float64)
        self.last_interval = 0
        self.open_events: dict[str, Event] = {}
        self._key_to_name = key_to_name

    @property
    def node_states(self) -> dict[str, NodeState]:
        return {
            self._key_to_name(int(k)): NodeState(self._key_to_name(int(k)), float(v), self.last_interval)
            for k, v in zip(self.keys, self.f)
        }

    def signal_of(self, key: int) -> float:
        i = np.searchsorted(self.keys, key)
        return float(self.f[i]) if i < len(self.keys) and self.keys[i] == key else 0.0

    def update(self, keys: np.ndarray, delta: np.ndarray, alpha: float, interval: int = 0) -> np.ndarray:
        """Smooth ``delta`` into the stored signals for ``keys`` (sorted,
        unique) and decay every stored region not in ``keys``.  Returns the
        new signal for each of ``keys``."""
        f_prev = np.zeros(len(keys), dtype=np.float64)
        gone_k = gone_f = None
        if len(self.keys):
            pos = np.searchsorted(keys, self.keys)
            safe = np.minimum(pos, max(len(keys) - 1, 0))
            present = (pos < len(keys)) & (keys[safe] == self.keys) if len(keys) else np.zeros(len(self.keys), bool)
            f_prev[pos[present]] = self.f[present]
            gone_k = self.keys[~present]
            gone_f = alpha * self.f[~present]
            keep = gone_f >= GC_THRESHOLD
            gone_k, gone_f = gone_k[keep], gone_f[keep]
        F = np.clip(alpha * f_prev + (1.0 - alpha) * delta, 0.0, 1.0)
        nz = F > 0.0
        if gone_k is not None and len(gone_k):
            k = np.concatenate([keys[nz], gone_k])
            v = np.concatenate([F[nz], gone_f])
            order = np.argsort(k, kind="stable")
            self.keys, self.f = k[order], v[order]
        else:
            self.keys, self.f = keys[nz].copy(), F[nz]
        self.last_interval = interval
        return F


def node_deltas(window_count, increment_count, params: DetectorParams) -> tuple[np.ndarray, np.ndarray]:
    """Poisson probability and scaled signal for arrays of node counts."""
    lam = np.asarray(window_count, dtype=np.float64) * (params.dt / params.horizon)
    c = np.asarray(increment_count)
    p = poisson_pmf_array(c, lam)
    delta = np.where(p < params.tau1, (params.tau1 - p) / params.tau1, 0.0)
    if params.bursts_only:
        delta[c <= lam] = 0.0
    return p, delta


def detect_interval(
    tree,
    state: DetectorState,
    params: DetectorParams,
    itv: Interval | None = None,
    increment_posts: Sequence[Post] | None = None,
    flagging: bool = True,
) -> tuple[list[Event], DetectorState]:
    """Update every region's signal for one interval and flag candidates.

    ``tree`` is a :class:`~quadevent.quadtree.QuadTree` or any object with
    the same region arrays (``key``, ``window_count``, ``increment_count``)
    and accessors (``path``, ``bbox``, ``increment_indices``).
    """
    itv = itv or tree.interval
    if increment_posts is None:
        increment_posts = getattr(tree, "increment_posts", ())
    _, delta = node_deltas(tree.window_count, tree.increment_count, params)
    F = state.update(tree.key, delta, params.alpha, itv.index)
    candidates = []
    if flagging:
        for i in np.flatnonzero(F >= params.tau2):
            members = tuple(increment_posts[j] for j in tree.increment_indices(i))
            candidates.append(
                Event(
                    region_path=tree.path(i),
                    bbox=tree.bbox(i),
                    start_ts=itv.head_ts,
                    end_ts=itv.increment_end,
                    period_s=itv.dt,
                    post_ids=tuple(p.id for p in members),
                    post_count=len(members),
                    signal=float(F[i]),
                    meta={"posts": members},
                )
            )
    return candidates, state


def event_posts(ev: Event) -> tuple[Post, ...]:
    return ev.meta.get("posts", ())


def merge(state: DetectorState, candidates: Iterable[Event], itv: Interval) -> tuple[list[Event], DetectorState]:
    """Extend open events by same-region candidates; close the rest."""
    still_open: dict[str, Event] = {}
    for c in candidates:
        prev = state.open_events.get(c.region_path)
        if prev is not None and prev.end_ts == c.start_ts:
            posts = event_posts(prev) + event_posts(c)
            ids = prev.post_ids + c.post_ids
            still_open[c.region_path] = replace(
                prev,
                end_ts=prev.end_ts + itv.dt,
                period_s=prev.period_s + itv.dt,
                post_ids=ids,
                post_count=len(ids),
                signal=(prev.signal + c.signal) / 2.0,
                meta={"posts": posts},
            )
        else:
            still_open[c.region_path] = c
    closed = [
        e for path, e in state.open_events.items()
        if path not in still_open or still_open[path].start_ts != e.start_ts
    ]
    state.open_events = still_open
    closed.sort(key=lambda e: (e.start_ts, e.region_path))
    return closed, state


def close_all(state: DetectorState) -> list[Event]:
    closed = sorted(state.open_events.values(), key=lambda e: (e.start_ts, e.region_path))
    state.open_events = {}
    return closed


def unique_entities(ev: Event) -> set[str]:
    posts = event_posts(ev)
    if posts:
        return {ent for p in posts for ent in p.entities}
    return {ent for ent, _ in ev.top_entities}


def strength_rank(ev: Event) -> tuple:
    """Total order used by subsumption: lower ranks win."""
    return (-ev.signal, area_sqkm(ev.bbox), ev.start_ts, ev.region_path)


def prune(
    closed: Sequence[Event],
    concurrent: Sequence[Event],
    params: DetectorParams,
    subsume: bool = True,
) -> list[Event]:
    """Duration filter, keep-strongest subsumption, then the entity filter."""
    out = []
    for e in closed:
        if e.period_s < params.theta_duration:
            continue
        if subsume:
            r = strength_rank(e)
            beaten = False
            for o in concurrent:
                if o is e or (o.region_path == e.region_path and o.start_ts == e.start_ts):
                    continue
                if o.overlaps_in_time(e) and paths_overlap(o.region_path, e.region_path) and strength_rank(o) < r:
                    beaten = True
                    break
            if beaten:
                continue
        if len(unique_entities(e)) < params.theta_entity:
            continue
        out.append(e)
    return out


def top_entities(ev: Event, posts: Sequence[Post], k: int) -> list[tuple[str, int]]:
    """The ``k`` entities present in the most member posts."""
    counts = Counter(ent for p in posts for ent in set(p.entities))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def finalize(ev: Event, k: int, detector: str = "quadtree") -> Event:
    """Attach top entities and strength index to a closed event."""
    posts = event_posts(ev)
    top = top_entities(ev, posts, k)
    si = strength_index(ev.post_count, [c for _, c in top]) if ev.post_count else 0.0
    return replace(ev, top_entities=tuple(top), si_value=si, detector=detector)


@dataclass
class PruneHistory:
    """Closed events kept as subsumption comparators while they can still
    overlap an event that has not closed yet."""

    events: list[Event] = field(default_factory=list)

    def comparators(self, state: DetectorState, closed: Sequence[Event], params: DetectorParams) -> list[Event]:
        long_enough = [e for e in closed if e.period_s >= params.theta_duration]
        self.events.extend(long_enough)
        return list(state.open_events.values()) + self.events

    def gc(self, state: DetectorState, now_ts: int) -> None:
        horizon = min([e.start_ts for e in state.open_events.values()] + [now_ts])
        self.events = [e for e in self.events if e.end_ts > horizon]
