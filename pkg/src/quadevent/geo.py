"""Spherical distance and area helpers."""

import math

import numpy as np

from .model import BoundingBox, GeoPoint

EARTH_RADIUS_M = 6_371_000.0
# km per degree of arc on the 6371 km sphere
KM_PER_DEG = 2 * math.pi * 6371.0 / 360.0


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters."""
    return haversine_m(a.lat, a.lon, b.lat, b.lon)


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = phi2 - phi1
    dlmb = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def area_sqkm(bbox: BoundingBox) -> float:
    """Equirectangular area of a lat/lon box in km^2."""
    dlat = bbox.max_lat - bbox.min_lat
    dlon = bbox.max_lon - bbox.min_lon
    return dlat * KM_PER_DEG * dlon * KM_PER_DEG * math.cos(math.radians(bbox.mid_lat))


def haversine_many(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Distances in meters from one point to arrays of points."""
    phi1 = math.radians(lat)
    phi2 = np.radians(lats)
    dphi = phi2 - phi1
    dlmb = np.radians(lons - lon)
    h = np.sin(dphi / 2) ** 2 + math.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def meters_to_degrees(lat: float, north_m, east_m):
    """Small metric offsets at latitude ``lat`` as (dlat, dlon) degrees."""
    return north_m / 1000.0 / KM_PER_DEG, east_m / 1000.0 / (KM_PER_DEG * math.cos(math.radians(lat)))
