from .cluster import ClusterDetector, ClusterParams, Union, cluster_detect, cluster_tick, dedupe_unions, sweep
from .poi import Poi, PoiDetector, assign_to_poi, poi_detect

__all__ = [
    "ClusterDetector",
    "ClusterParams",
    "Poi",
    "PoiDetector",
    "Union",
    "assign_to_poi",
    "cluster_detect",
    "cluster_tick",
    "dedupe_unions",
    "poi_detect",
    "sweep",
]
