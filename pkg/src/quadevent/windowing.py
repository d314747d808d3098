"""Event-time clock and post buffer for the sliding window.

Interval ``i`` looks at the window ``[T_i - T, T_i)`` to estimate a
region's normal rate and at the increment ``[T_i, T_i + dt)`` to test it.
Interval heads sit on an epoch-aligned grid of ``dt`` multiples.
"""

from __future__ import annotations

import numpy as np

from .model import BoundingBox, Interval, Post


class OutOfOrderBeyondSlack(ValueError):
    """A post arrived for an increment that was already emitted."""


class WindowStore:
    """Time-ordered buffer of posts with an auxiliary integer key per post.

    The key is opaque to the store; the quad-tree engine uses it for the
    post's spatial cell code, the POI baseline for the POI index.
    """

    def __init__(self, dt: int, horizon: int, slack: int = 0):
        if dt <= 0 or horizon <= 0:
            raise ValueError("dt and horizon must be positive")
        if horizon % dt:
            raise ValueError("horizon must be a multiple of dt")
        self.dt = int(dt)
        self.horizon = int(horizon)
        self.slack = int(slack)
        self.rejected = 0
        self.first_ts: int | None = None
        self._cap = 1024
        self._ts = np.empty(self._cap, dtype=np.int64)
        self._keys = np.empty(self._cap, dtype=np.int64)
        self._posts: list[Post] = []
        self._start = 0
        self._n = 0
        self._next_head: int | None = None
        self._emitted = 0
        self._clock: int | None = None

    def __len__(self) -> int:
        return self._n - self._start

    @property
    def buffer(self) -> list[Post]:
        return self._posts[self._start : self._n]

    @property
    def last_interval(self) -> int:
        return self._emitted

    @property
    def next_head(self) -> int | None:
        return self._next_head

    def _grow(self) -> None:
        live = self._n - self._start
        if self._start and live <= self._cap // 2:
            self._ts[:live] = self._ts[self._start : self._n]
            self._keys[:live] = self._keys[self._start : self._n]
        else:
            self._cap *= 2
            ts = np.empty(self._cap, dtype=np.int64)
            keys = np.empty(self._cap, dtype=np.int64)
            ts[:live] = self._ts[self._start : self._n]
            keys[:live] = self._keys[self._start : self._n]
            self._ts, self._keys = ts, keys
        del self._posts[: self._start]
        self._n = live
        self._start = 0

    def ingest(self, post: Post, key: int = 0) -> WindowStore:
        if self._emitted and post.ts < self._next_head - self.slack:
            self.rejected += 1
            raise OutOfOrderBeyondSlack(
                f"post {post.id} at ts={post.ts} is before the open increment "
                f"starting at {self._next_head} (slack {self.slack}s)"
            )
        if self._n == self._cap:
            self._grow()
        n = self._n
        if n > self._start and post.ts < self._ts[n - 1]:
            # late but within slack: keep the buffer sorted
            idx = int(np.searchsorted(self._ts[self._start : n], post.ts, side="right")) + self._start
            self._ts[idx + 1 : n + 1] = self._ts[idx:n]
            self._keys[idx + 1 : n + 1] = self._keys[idx:n]
            self._ts[idx] = post.ts
            self._keys[idx] = key
            self._posts.insert(idx, post)
        else:
            self._ts[n] = post.ts
            self._keys[n] = key
            self._posts.append(post)
        self._n = n + 1
        if self.first_ts is None or post.ts < self.first_ts:
            self.first_ts = post.ts
        return self

    def advance(self, now_ts: int) -> list[Interval]:
        """Emit every interval whose increment ends at or before ``now_ts``."""
        if self._clock is not None and now_ts <= self._clock:
            return []
        self._clock = now_ts
        if self.first_ts is None:
            return []
        if self._next_head is None:
            self._next_head = -(-self.first_ts // self.dt) * self.dt
        out = []
        while self._next_head + self.dt <= now_ts:
            self._emitted += 1
            out.append(Interval(self._emitted, self._next_head, self.dt, self.horizon))
            self._next_head += self.dt
        if out:
            self._evict_before(out[0].window_start)
        return out

    def _evict_before(self, ts: int) -> None:
        live = self._ts[self._start : self._n]
        self._start += int(np.searchsorted(live, ts, side="left"))

    def is_warm(self, itv: Interval) -> bool:
        """True once the window of ``itv`` lies entirely within observed time."""
        return self.first_ts is not None and itv.window_start >= self.first_ts

    def _range(self, lo_ts: int, hi_ts: int) -> tuple[int, int]:
        live = self._ts[self._start : self._n]
        lo = int(np.searchsorted(live, lo_ts, side="left"))
        hi = int(np.searchsorted(live, hi_ts, side="left"))
        return lo + self._start, hi + self._start

    def window_range(self, itv: Interval) -> tuple[int, int]:
        return self._range(itv.window_start, itv.head_ts)

    def increment_range(self, itv: Interval) -> tuple[int, int]:
        return self._range(itv.head_ts, itv.increment_end)

    def keys(self, span: tuple[int, int]) -> np.ndarray:
        return self._keys[span[0] : span[1]]

    def posts(self, span: tuple[int, int]) -> list[Post]:
        return self._posts[span[0] : span[1]]

    def window_posts(self, itv: Interval, bbox: BoundingBox | None = None, closed: bool = False) -> list[Post]:
        return _filter(self.posts(self.window_range(itv)), bbox, closed)

    def increment_posts(self, itv: Interval, bbox: BoundingBox | None = None, closed: bool = False) -> list[Post]:
        return _filter(self.posts(self.increment_range(itv)), bbox, closed)


def _filter(posts: list[Post], bbox: BoundingBox | None, closed: bool) -> list[Post]:
    if bbox is None:
        return posts
    return [p for p in posts if bbox.contains(p.lat, p.lon, closed)]
