"""Streaming drivers: replay posts in event time and emit finalized events."""

from __future__ import annotations

import logging
from typing import Iterable, Iterator

from .detector import (
    DetectorParams,
    DetectorState,
    PruneHistory,
    close_all,
    detect_interval,
    finalize,
    key_to_path,
    merge,
    prune,
)
from .model import BoundingBox, Event, Interval, Post
from .quadtree import CellCoder, build_from_codes
from .windowing import OutOfOrderBeyondSlack, WindowStore

log = logging.getLogger(__name__)


class StreamDetector:
    """Shared machinery: one region set per interval, signals, merging and
    pruning at event closure.  Subclasses decide how posts map to region
    keys and how an interval's regions are built."""

    name = "base"
    subsume = True

    def __init__(self, params: DetectorParams, suppress_warmup: bool = True, slack: int = 0):
        self.params = params
        self.suppress_warmup = suppress_warmup
        self.store = WindowStore(params.dt, params.horizon, slack)
        self.state = DetectorState(self._key_name)
        self.history = PruneHistory()
        self.dropped = 0
        self.intervals = 0
        self._last_ts: int | None = None

    @property
    def late(self) -> int:
        return self.store.rejected

    def _key_name(self, key: int) -> str:
        raise NotImplementedError

    def _post_key(self, post: Post) -> int | None:
        raise NotImplementedError

    def _regions(self, itv: Interval, win_keys, inc_keys):
        raise NotImplementedError

    def push(self, post: Post) -> list[Event]:
        out = []
        for itv in self.store.advance(post.ts):
            out.extend(self._step(itv))
        key = self._post_key(post)
        if key is None:
            self.dropped += 1
            return out
        try:
            self.store.ingest(post, key)
        except OutOfOrderBeyondSlack:
            log.debug("late post %s dropped", post.id)
            return out
        if self._last_ts is None or post.ts > self._last_ts:
            self._last_ts = post.ts
        return out

    def flush(self) -> list[Event]:
        """Process the interval holding the last post, then close everything."""
        out = []
        if self._last_ts is not None:
            dt = self.params.dt
            for itv in self.store.advance((self._last_ts // dt + 1) * dt):
                out.extend(self._step(itv))
        now = self.store.next_head or 0
        out.extend(self._close(close_all(self.state), now))
        return out

    def run(self, posts: Iterable[Post]) -> Iterator[Event]:
        for p in posts:
            yield from self.push(p)
        yield from self.flush()

    def _step(self, itv: Interval) -> list[Event]:
        self.intervals += 1
        store = self.store
        wr = store.window_range(itv)
        ir = store.increment_range(itv)
        regions = self._regions(itv, store.keys(wr), store.keys(ir))
        flagging = not self.suppress_warmup or store.is_warm(itv)
        cands, _ = detect_interval(regions, self.state, self.params, itv, store.posts(ir), flagging)
        closed, _ = merge(self.state, cands, itv)
        return self._close(closed, itv.increment_end)

    def _close(self, closed: list[Event], now: int) -> list[Event]:
        if not closed:
            if self.history.events:
                self.history.gc(self.state, now)
            return []
        comparators = self.history.comparators(self.state, closed, self.params)
        kept = prune(closed, comparators, self.params, subsume=self.subsume)
        self.history.gc(self.state, now)
        return [finalize(e, self.params.k_top, self.name) for e in kept]


class QuadTreeDetector(StreamDetector):
    """Multi-scale detector over a quad-tree rebuilt every interval."""

    name = "quadtree"

    def __init__(
        self,
        params: DetectorParams,
        root_bbox: BoundingBox,
        theta_count: int = 20,
        theta_area: float = 0.001,
        suppress_warmup: bool = True,
        slack: int = 0,
    ):
        self.coder = CellCoder(root_bbox, theta_area)
        self.theta_count = theta_count
        self.theta_area = theta_area
        self._tree = None
        super().__init__(params, suppress_warmup, slack)

    def _key_name(self, key: int) -> str:
        return key_to_path(key)

    def _post_key(self, post: Post) -> int | None:
        r = self.coder.root
        if not (r.min_lat <= post.lat <= r.max_lat and r.min_lon <= post.lon <= r.max_lon):
            return None
        return self.coder.encode_one(post.lat, post.lon)

    def _regions(self, itv, win_keys, inc_keys):
        self._tree = build_from_codes(win_keys, inc_keys, self.coder, self.theta_count, self.theta_area, itv, self._tree)
        return self._tree


def detect(posts: Iterable[Post], params: DetectorParams, root_bbox: BoundingBox, **kw) -> list[Event]:
    return list(QuadTreeDetector(params, root_bbox, **kw).run(posts))
