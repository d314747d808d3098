"""Streaming spatio-temporal event detection over geotagged posts."""

from .detector import DetectorParams, poisson_pmf, scaled_signal, smooth
from .metrics import EvalReport, TruthEvent, evaluate, match_events, strength_index
from .model import BoundingBox, Event, GeoPoint, Interval, Post, validate_post
from .pipeline import QuadTreeDetector, detect
from .quadtree import QuadTree, build

__all__ = [
    "BoundingBox",
    "DetectorParams",
    "EvalReport",
    "Event",
    "GeoPoint",
    "Interval",
    "Post",
    "QuadTree",
    "QuadTreeDetector",
    "TruthEvent",
    "build",
    "detect",
    "evaluate",
    "match_events",
    "poisson_pmf",
    "scaled_signal",
    "smooth",
    "strength_index",
    "validate_post",
]
