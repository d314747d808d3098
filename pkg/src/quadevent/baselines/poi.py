"""POI baseline: the same Poisson/smoothing pipeline over fixed cells
around known points of interest instead of a quad-tree."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..detector import DetectorParams
from ..geo import haversine_many, meters_to_degrees
from ..model import BoundingBox, Event, GeoPoint, Interval, Post
from ..pipeline import StreamDetector

POI_RADIUS_M = 100.0


@dataclass(frozen=True)
class Poi:
    name: str
    center: GeoPoint
    radius_m: float = POI_RADIUS_M


class _PoiIndex:
    def __init__(self, pois: Sequence[Poi], cell: str = "disk"):
        if not pois:
            raise ValueError("POI list is empty")
        if cell not in ("disk", "square"):
            raise ValueError(f"unknown POI cell shape {cell!r}")
        self.pois = list(pois)
        self.cell = cell
        self.lats = np.array([p.center.lat for p in pois])
        self.lons = np.array([p.center.lon for p in pois])
        self.radii = np.array([p.radius_m for p in pois])

    def assign(self, lat: float, lon: float) -> int | None:
        d = haversine_many(lat, lon, self.lats, self.lons)
        if self.cell == "disk":
            ok = d < self.radii
        else:
            # r x r square centered on the POI, in local metric offsets
            dlat, dlon = meters_to_degrees(lat, self.radii / 2, self.radii / 2)
            ok = (np.abs(lat - self.lats) < dlat) & (np.abs(lon - self.lons) < dlon)
        if not ok.any():
            return None
        d = np.where(ok, d, np.inf)
        return int(np.argmin(d))

    def bbox(self, i: int) -> BoundingBox:
        p = self.pois[i]
        half = p.radius_m if self.cell == "disk" else p.radius_m / 2
        dlat, dlon = meters_to_degrees(p.center.lat, half, half)
        return BoundingBox(p.center.lat - dlat, p.center.lon - dlon, p.center.lat + dlat, p.center.lon + dlon)


def assign_to_poi(p: GeoPoint, pois: Sequence[Poi], cell: str = "disk") -> Poi | None:
    """Nearest POI whose cell holds the point; ties go to the earlier POI."""
    i = _PoiIndex(pois, cell).assign(p.lat, p.lon)
    return None if i is None else pois[i]


class PoiCells:
    """Per-interval region set over POI cells (same surface as a QuadTree)."""

    def __init__(self, index: _PoiIndex, interval: Interval, win_keys: np.ndarray, inc_keys: np.ndarray):
        n = len(index.pois)
        self.index = index
        self.interval = interval
        self.key = np.arange(n, dtype=np.int64)
        self.window_count = np.bincount(win_keys, minlength=n)
        self.increment_count = np.bincount(inc_keys, minlength=n)
        self._inc_keys = inc_keys

    def __len__(self) -> int:
        return len(self.key)

    def path(self, i: int) -> str:
        return f"poi:{self.index.pois[i].name}"

    def bbox(self, i: int) -> BoundingBox:
        return self.index.bbox(i)

    def increment_indices(self, i: int) -> np.ndarray:
        return np.flatnonzero(self._inc_keys == i)


class PoiDetector(StreamDetector):
    """Cells never overlap after nearest assignment, so no subsumption."""

    name = "poi"
    subsume = False

    def __init__(self, params: DetectorParams, pois: Sequence[Poi], cell: str = "disk", suppress_warmup: bool = True, slack: int = 0):
        self.index = _PoiIndex(pois, cell)
        super().__init__(params, suppress_warmup, slack)

    def _key_name(self, key: int) -> str:
        return f"poi:{self.index.pois[key].name}"

    def _post_key(self, post: Post) -> int | None:
        return self.index.assign(post.lat, post.lon)

    def _regions(self, itv, win_keys, inc_keys):
        return PoiCells(self.index, itv, win_keys, inc_keys)


def poi_detect(posts: Iterable[Post], pois: Sequence[Poi], params: DetectorParams, cell: str = "disk", **kw) -> list[Event]:
    return list(PoiDetector(params, pois, cell, **kw).run(posts))
