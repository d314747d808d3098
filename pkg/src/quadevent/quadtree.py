"""Per-interval quad-tree over a fixed root region.

Each post gets a cell code once, at ingestion: the base-4 digits of the
deepest cell that can ever exist (digits 0=SW, 1=SE, 2=NW, 3=NE).  A node
at depth ``d`` is then identified by the first ``d`` digits of the code,
so every node's posts form a contiguous run of the sorted code array and
the tree can be rebuilt from scratch every interval with a handful of
``searchsorted`` calls per level.

Interior edges are half-open: a point on a mid-latitude line goes north,
on a mid-longitude line east.  Because ties always go to the upper half,
the root's max edges end up inclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geo import KM_PER_DEG, area_sqkm
from .model import BoundingBox, DegenerateBox, Interval, Post

DegenerateRootBox = DegenerateBox

MAX_DEPTH = 31
# offset of the first key at each depth, so (depth, prefix) -> unique int64
LEVEL_OFFSET = np.array([(4**d - 1) // 3 for d in range(MAX_DEPTH + 2)], dtype=np.int64)


def subdivide(bbox: BoundingBox) -> tuple[BoundingBox, BoundingBox, BoundingBox, BoundingBox]:
    """Split at the lat/lon midpoints into (SW, SE, NW, NE)."""
    mlat, mlon = bbox.mid_lat, bbox.mid_lon
    return (
        BoundingBox(bbox.min_lat, bbox.min_lon, mlat, mlon),
        BoundingBox(bbox.min_lat, mlon, mlat, bbox.max_lon),
        BoundingBox(mlat, bbox.min_lon, bbox.max_lat, mlon),
        BoundingBox(mlat, mlon, bbox.max_lat, bbox.max_lon),
    )


def child_digit(bbox: BoundingBox, lat: float, lon: float) -> int:
    return 2 * (lat >= bbox.mid_lat) + (lon >= bbox.mid_lon)


def path_of(root: BoundingBox, lat: float, lon: float, depth: int) -> str:
    """Digits of the depth-``depth`` cell containing the point."""
    digits = []
    box = root
    for _ in range(depth):
        k = child_digit(box, lat, lon)
        digits.append(str(k))
        box = subdivide(box)[k]
    return "".join(digits)


def path_bbox(root: BoundingBox, path: str) -> BoundingBox:
    box = root
    for ch in path:
        box = subdivide(box)[int(ch)]
    return box


def is_ancestor_or_self(a: str, b: str) -> bool:
    return b.startswith(a)


def paths_overlap(a: str, b: str) -> bool:
    """Quad-tree regions overlap iff one path is a prefix of the other."""
    return a.startswith(b) or b.startswith(a)


def _areas(min_lat, min_lon, max_lat, max_lon):
    mid = (min_lat + max_lat) / 2.0
    return (max_lat - min_lat) * KM_PER_DEG * (max_lon - min_lon) * KM_PER_DEG * np.cos(np.radians(mid))


class CellCoder:
    """Maps points to depth-``depth`` cell codes under a fixed root box."""

    def __init__(self, root: BoundingBox, theta_area: float):
        if not isinstance(root, BoundingBox):
            root = BoundingBox(*root)
        self.root = root
        self.theta_area = float(theta_area)
        self.depth = self._max_depth()

    def _max_depth(self) -> int:
        # widest cos over the root's latitude span bounds every cell's area
        lo, hi = self.root.min_lat, self.root.max_lat
        cos_max = 1.0 if lo <= 0.0 <= hi else max(math.cos(math.radians(lo)), math.cos(math.radians(hi)))
        base = (hi - lo) * KM_PER_DEG * (self.root.max_lon - self.root.min_lon) * KM_PER_DEG * cos_max
        d = 0
        while d < MAX_DEPTH and base / 4.0**d >= self.theta_area:
            d += 1
        return d

    def contains(self, lat, lon):
        r = self.root
        return (lat >= r.min_lat) & (lat <= r.max_lat) & (lon >= r.min_lon) & (lon <= r.max_lon)

    def encode(self, lat, lon) -> np.ndarray:
        lat = np.asarray(lat, dtype=np.float64)
        lon = np.asarray(lon, dtype=np.float64)
        r = self.root
        lo_lat = np.full(lat.shape, r.min_lat)
        hi_lat = np.full(lat.shape, r.max_lat)
        lo_lon = np.full(lon.shape, r.min_lon)
        hi_lon = np.full(lon.shape, r.max_lon)
        code = np.zeros(lat.shape, dtype=np.int64)
        for _ in range(self.depth):
            mlat = (lo_lat + hi_lat) / 2.0
            mlon = (lo_lon + hi_lon) / 2.0
            north = lat >= mlat
            east = lon >= mlon
            lo_lat = np.where(north, mlat, lo_lat)
            hi_lat = np.where(north, hi_lat, mlat)
            lo_lon = np.where(east, mlon, lo_lon)
            hi_lon = np.where(east, hi_lon, mlon)
            code = code * 4 + 2 * north + east
        return code

    def encode_one(self, lat: float, lon: float) -> int:
        r = self.root
        lo_lat, hi_lat, lo_lon, hi_lon = r.min_lat, r.max_lat, r.min_lon, r.max_lon
        code = 0
        for _ in range(self.depth):
            mlat = (lo_lat + hi_lat) / 2.0
            mlon = (lo_lon + hi_lon) / 2.0
            if lat >= mlat:
                lo_lat, north = mlat, 1
            else:
                hi_lat, north = mlat, 0
            if lon >= mlon:
                lo_lon, east = mlon, 1
            else:
                hi_lon, east = mlon, 0
            code = code * 4 + 2 * north + east
        return code


@dataclass(eq=False)
class QuadNode:
    path: str
    bbox: BoundingBox
    window_count: int
    increment_count: int
    children: list[QuadNode] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.path)


class QuadTree:
    """Immutable result of one build.

    Node attributes live in parallel arrays in breadth-first order (which is
    also ascending ``key`` order); :class:`QuadNode` objects are only
    materialized on demand through :attr:`root`, :attr:`node_index` and
    :meth:`nodes`.
    """

    def __init__(self, interval, coder, depth, prefix, wcount, icount, bounds, split, inc_sorted, inc_order):
        self.interval = interval
        self.coder = coder
        self.depth = depth
        self.prefix = prefix
        self.key = prefix + LEVEL_OFFSET[depth]
        self.window_count = wcount
        self.increment_count = icount
        self.bounds = bounds
        self.split = split
        self._inc_sorted = inc_sorted
        self._inc_order = inc_order
        self.thresholds: tuple[int, float] | None = None
        self._ranges: tuple[np.ndarray, np.ndarray] | None = None
        self._root: QuadNode | None = None
        self._index: dict[str, QuadNode] | None = None

    def __len__(self) -> int:
        return len(self.prefix)

    def path(self, i: int) -> str:
        d = int(self.depth[i])
        return np.base_repr(int(self.prefix[i]), 4).zfill(d) if d else ""

    def bbox(self, i: int) -> BoundingBox:
        return BoundingBox(*(float(v) for v in self.bounds[i]))

    def area(self, i: int) -> float:
        return area_sqkm(self.bbox(i))

    def cell_ranges(self) -> tuple[np.ndarray, np.ndarray]:
        """Per node, the half-open range of depth-``coder.depth`` codes it covers."""
        if self._ranges is None:
            shift = 2 * (self.coder.depth - self.depth)
            self._ranges = (self.prefix << shift, (self.prefix + 1) << shift)
        return self._ranges

    def increment_indices(self, i: int) -> np.ndarray:
        """Indices (ascending, i.e. time order) into the increment post list
        of the posts falling in node ``i``."""
        shift = 2 * (self.coder.depth - int(self.depth[i]))
        p = int(self.prefix[i])
        lo = np.searchsorted(self._inc_sorted, p << shift, side="left")
        hi = np.searchsorted(self._inc_sorted, (p + 1) << shift, side="left")
        return np.sort(self._inc_order[lo:hi])

    def _materialize(self) -> None:
        nodes = [
            QuadNode(self.path(i), self.bbox(i), int(self.window_count[i]), int(self.increment_count[i]))
            for i in range(len(self))
        ]
        # children of a split node are the next four unseen nodes one level down
        pos = {}
        for i in range(len(self)):
            pos.setdefault(int(self.depth[i]), i)
        for i in range(len(self)):
            if self.split[i]:
                d = int(self.depth[i]) + 1
                j = pos[d]
                nodes[i].children = nodes[j : j + 4]
                pos[d] = j + 4
        self._root = nodes[0]
        self._index = {n.path: n for n in nodes}

    @property
    def root(self) -> QuadNode:
        if self._root is None:
            self._materialize()
        return self._root

    @property
    def node_index(self) -> dict[str, QuadNode]:
        if self._index is None:
            self._materialize()
        return self._index

    def nodes(self) -> list[QuadNode]:
        """All nodes, internal and leaf, in pre-order."""
        out = []
        stack = [self.root]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(reversed(n.children))
        return out

    def dump(self) -> list[str]:
        """Debug lines ``path,window_count,increment_count,min_lat,min_lon,max_lat,max_lon``."""
        return [
            f"{n.path},{n.window_count},{n.increment_count},"
            f"{n.bbox.min_lat!r},{n.bbox.min_lon!r},{n.bbox.max_lat!r},{n.bbox.max_lon!r}"
            for n in self.nodes()
        ]


_QUAD = np.arange(4, dtype=np.int64)
_EDGES = np.arange(5, dtype=np.int64)


def build_from_codes(
    win_codes: np.ndarray,
    inc_codes: np.ndarray,
    coder: CellCoder,
    theta_count: int,
    theta_area: float,
    interval: Interval | None = None,
    prev: QuadTree | None = None,
) -> QuadTree:
    """Build the tree from the cell codes of window and increment posts.

    A node is split iff its window count exceeds ``theta_count`` and its
    area is at least ``theta_area``.  All four children are materialized
    even when empty.  Increment posts never influence the shape.

    ``prev`` is an earlier tree under the same coder and thresholds; when
    every one of its split decisions still holds for the new counts the
    shape is identical, so only the counts are recomputed.
    """
    D = coder.depth
    w = np.sort(win_codes)
    inc_order = np.argsort(inc_codes, kind="stable")
    inc = inc_codes[inc_order]
    if prev is not None and prev.coder is coder and prev.thresholds == (theta_count, theta_area):
        tree = _reshape_counts(prev, w, inc, inc_order, interval)
        if tree is not None:
            return tree
    r = coder.root

    prefix = np.zeros(1, dtype=np.int64)
    # box edges as separate arrays: min_lat, min_lon, max_lat, max_lon
    lat0, lon0, lat1, lon1 = np.array([[r.min_lat], [r.min_lon], [r.max_lat], [r.max_lon]], dtype=np.float64)
    # cell boundaries grouped by parent: the root alone, then four siblings each
    edges = np.array([[0, 1]], dtype=np.int64)
    levels = []
    for d in range(D + 1):
        edges <<= 2 * (D - d)
        we = w.searchsorted(edges)
        ie = inc.searchsorted(edges)
        wc = (we[:, 1:] - we[:, :-1]).ravel()
        ic = (ie[:, 1:] - ie[:, :-1]).ravel()
        split = wc > theta_count
        if d == D:
            split[:] = False
        else:
            cand = np.flatnonzero(split)
            if len(cand):
                small = _areas(lat0[cand], lon0[cand], lat1[cand], lon1[cand]) < theta_area
                split[cand[small]] = False
        levels.append((d, prefix, wc, ic, (lat0, lon0, lat1, lon1), split))
        if not split.any():
            break
        first = prefix[split][:, None] * 4
        prefix = (first + _QUAD).ravel()
        edges = first + _EDGES
        a0, b0, a1, b1 = lat0[split], lon0[split], lat1[split], lon1[split]
        mlat = (a0 + a1) / 2.0
        mlon = (b0 + b1) / 2.0
        # children in digit order SW, SE, NW, NE
        lat0, lat1 = np.repeat(a0, 4), np.repeat(a1, 4)
        lon0, lon1 = np.repeat(b0, 4), np.repeat(b1, 4)
        lat0[2::4] = lat0[3::4] = mlat
        lat1[0::4] = lat1[1::4] = mlat
        lon0[1::4] = lon0[3::4] = mlon
        lon1[0::4] = lon1[2::4] = mlon

    depth = np.concatenate([np.full(len(lv[1]), lv[0], dtype=np.int64) for lv in levels])
    prefix = np.concatenate([lv[1] for lv in levels])
    wc = np.concatenate([lv[2] for lv in levels])
    ic = np.concatenate([lv[3] for lv in levels])
    box = np.column_stack([np.concatenate([lv[4][k] for lv in levels]) for k in range(4)])
    split = np.concatenate([lv[5] for lv in levels])
    tree = QuadTree(interval, coder, depth, prefix, wc, ic, box, split, inc, inc_order)
    tree.thresholds = (theta_count, theta_area)
    return tree


def _reshape_counts(prev: QuadTree, w, inc, inc_order, interval) -> QuadTree | None:
    """``prev``'s shape with fresh counts, or None if any node would now
    split differently."""
    theta_count, theta_area = prev.thresholds
    lo, hi = prev.cell_ranges()
    wc = w.searchsorted(hi) - w.searchsorted(lo)
    over = wc > theta_count
    split = prev.split
    if (split & ~over).any():
        return None
    grow = np.flatnonzero(over & ~split & (prev.depth < prev.coder.depth))
    if len(grow):
        b = prev.bounds[grow]
        if (_areas(b[:, 0], b[:, 1], b[:, 2], b[:, 3]) >= theta_area).any():
            return None
    ic = inc.searchsorted(hi) - inc.searchsorted(lo)
    tree = QuadTree(interval, prev.coder, prev.depth, prev.prefix, wc, ic, prev.bounds, split, inc, inc_order)
    tree.thresholds = prev.thresholds
    tree._ranges = prev._ranges
    return tree


def build(
    win: Sequence[Post],
    inc: Sequence[Post],
    root_bbox: BoundingBox,
    theta_count: int,
    theta_area: float,
    interval: Interval | None = None,
) -> QuadTree:
    coder = CellCoder(root_bbox, theta_area)
    codes = []
    for posts in (win, inc):
        lat = np.array([p.lat for p in posts], dtype=np.float64)
        lon = np.array([p.lon for p in posts], dtype=np.float64)
        if len(lat) and not coder.contains(lat, lon).all():
            raise ValueError("post outside the root bounding box")
        codes.append(coder.encode(lat, lon))
    tree = build_from_codes(codes[0], codes[1], coder, theta_count, theta_area, interval)
    tree.increment_posts = list(inc)
    return tree
