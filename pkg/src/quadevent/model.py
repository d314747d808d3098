"""Domain types shared across the detection pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping


class ValidationError(ValueError):
    """Base class for rejected input records."""


class OutOfRangeCoordinate(ValidationError):
    pass


class NegativeTimestamp(ValidationError):
    pass


class EmptyId(ValidationError):
    pass


class DegenerateBox(ValueError):
    """Bounding box with zero or negative extent."""


def _normalize_entities(entities: Iterable[str]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for ent in entities:
        ent = str(ent).strip().lower()
        if ent:
            seen.setdefault(ent, None)
    return tuple(seen)


@dataclass(frozen=True, slots=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0) or not (-180.0 <= self.lon <= 180.0):
            raise OutOfRangeCoordinate(f"({self.lat}, {self.lon}) outside WGS84 bounds")


@dataclass(frozen=True, slots=True)
class Post:
    """A geotagged social-media item.

    ``entities`` holds hashtags, mentions or photo tags, lowercased and
    deduplicated in first-seen order.
    """

    id: str
    ts: int
    lat: float
    lon: float
    entities: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class BoundingBox:
    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float

    def __post_init__(self):
        if not (self.min_lat < self.max_lat and self.min_lon < self.max_lon):
            raise DegenerateBox(f"degenerate or inverted bounding box: {self}")

    @property
    def mid_lat(self) -> float:
        return (self.min_lat + self.max_lat) / 2.0

    @property
    def mid_lon(self) -> float:
        return (self.min_lon + self.max_lon) / 2.0

    def contains(self, lat: float, lon: float, closed: bool = False) -> bool:
        """Half-open containment: min <= x < max.

        With ``closed=True`` the max edges are inclusive too, which is the
        rule for the root region of a quad-tree.
        """
        if closed:
            return self.min_lat <= lat <= self.max_lat and self.min_lon <= lon <= self.max_lon
        return self.min_lat <= lat < self.max_lat and self.min_lon <= lon < self.max_lon

    def intersects(self, other: BoundingBox) -> bool:
        return not (
            other.min_lat >= self.max_lat
            or other.max_lat <= self.min_lat
            or other.min_lon >= self.max_lon
            or other.max_lon <= self.min_lon
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.min_lat, self.min_lon, self.max_lat, self.max_lon)


@dataclass(frozen=True, slots=True)
class Interval:
    """One detection step: window ``[head_ts - horizon, head_ts)`` and
    increment ``[head_ts, head_ts + dt)``."""

    index: int
    head_ts: int
    dt: int
    horizon: int

    @property
    def window_start(self) -> int:
        return self.head_ts - self.horizon

    @property
    def increment_end(self) -> int:
        return self.head_ts + self.dt


@dataclass(frozen=True)
class Event:
    region_path: str
    bbox: BoundingBox
    start_ts: int
    end_ts: int
    period_s: int
    post_ids: tuple[str, ...]
    post_count: int
    signal: float
    top_entities: tuple[tuple[str, int], ...] = ()
    si_value: float = 0.0
    detector: str = "quadtree"
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def overlaps_in_time(self, other: Event) -> bool:
        return self.start_ts < other.end_ts and other.start_ts < self.end_ts


@dataclass(slots=True)
class NodeState:
    region_path: str
    f: float
    last_interval: int


def validate_post(raw: Post | Mapping[str, Any]) -> Post:
    """Normalize a raw record into a :class:`Post` or raise a
    :class:`ValidationError` subclass."""
    if isinstance(raw, Post):
        pid, ts, lat, lon, ents = raw.id, raw.ts, raw.lat, raw.lon, raw.entities
    else:
        try:
            pid = raw["id"]
            ts = raw["ts"]
            lat = raw["lat"]
            lon = raw["lon"]
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}") from None
        ents = raw.get("entities") or ()
        if isinstance(ents, str):
            raise ValidationError("entities must be a list of strings")
    if pid is None or str(pid) == "":
        raise EmptyId("post id is empty")
    try:
        ts = int(ts)
        lat = float(lat)
        lon = float(lon)
    except (TypeError, ValueError):
        raise ValidationError("non-numeric ts/lat/lon") from None
    if ts < 0:
        raise NegativeTimestamp(f"timestamp {ts} < 0")
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise OutOfRangeCoordinate(f"({lat}, {lon}) outside WGS84 bounds")
    return Post(str(pid), ts, lat, lon, _normalize_entities(ents))
