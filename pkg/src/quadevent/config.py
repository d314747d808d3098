"""Flat ``key = value`` run configuration."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .baselines.cluster import ClusterParams
from .detector import DetectorParams
from .model import BoundingBox


class ConfigError(ValueError):
    pass


_UNITS = {"s": 1, "m": 60, "min": 60, "h": 3600, "d": 86400}
_DURATION = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([a-z]*)\s*$")

DURATION_KEYS = {"horizon", "dt", "theta_duration", "cluster_tick", "cluster_gap", "slack"}


def parse_duration(text: str) -> int:
    """Seconds from ``600``, ``10m``, ``3d`` and the like."""
    m = _DURATION.match(text.lower())
    if not m or m.group(2) not in ("", *_UNITS):
        raise ConfigError(f"bad duration {text!r}")
    value = float(m.group(1)) * _UNITS.get(m.group(2), 1)
    if value != int(value):
        raise ConfigError(f"duration {text!r} is not a whole number of seconds")
    return int(value)


def parse_bbox(text: str) -> tuple[float, float, float, float]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != 4:
        raise ConfigError("root_bbox needs min_lat,min_lon,max_lat,max_lon")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"bad root_bbox {text!r}") from None
    BoundingBox(*vals)
    return vals


@dataclass(frozen=True)
class Config:
    # detector
    horizon: int = 3 * 86400
    dt: int = 600
    tau1: float = 0.01
    tau2: float = 0.4
    alpha: float = 0.5
    theta_duration: int = 3000
    theta_entity: int = 2
    k_top: int = 5
    bursts_only: bool = False
    suppress_warmup: bool = True
    slack: int = 0
    # quad-tree
    root_bbox: tuple[float, float, float, float] | None = None
    theta_count: int = 20
    theta_area: float = 0.001
    # baselines
    poi_cell: str = "disk"
    cluster_tick: int = 600
    cluster_gap: int = 3 * 3600
    cluster_radius_km: float = 0.25
    cluster_k: int = 2
    cluster_n: int = 5
    # synthetic workload
    seed: int = 0
    n_bursts: int = 10
    burst_posts: int = 60
    burst_minutes: int = 60
    background_rate: float = 120.0
    days: float = 7.0
    # input handling and paths
    max_invalid_frac: float = 0.01
    posts_path: str = ""
    events_path: str = ""
    truth_path: str = ""
    pois_path: str = ""
    report_path: str = ""

    def detector_params(self) -> DetectorParams:
        return DetectorParams(
            horizon=self.horizon,
            dt=self.dt,
            tau1=self.tau1,
            tau2=self.tau2,
            alpha=self.alpha,
            theta_duration=self.theta_duration,
            theta_entity=self.theta_entity,
            k_top=self.k_top,
            bursts_only=self.bursts_only,
        )

    def cluster_params(self) -> ClusterParams:
        return ClusterParams(self.cluster_tick, self.cluster_gap, self.cluster_radius_km, self.cluster_k, self.cluster_n)

    def bbox(self) -> BoundingBox:
        if self.root_bbox is None:
            raise ConfigError("root_bbox is required (min_lat,min_lon,max_lat,max_lon)")
        return BoundingBox(*self.root_bbox)

    def validate(self) -> Config:
        try:
            self.detector_params()
            self.cluster_params()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.theta_count < 0 or self.theta_area <= 0:
            raise ConfigError("theta_count must be >= 0 and theta_area > 0")
        if self.poi_cell not in ("disk", "square"):
            raise ConfigError("poi_cell must be disk or square")
        if not 0 <= self.max_invalid_frac <= 1:
            raise ConfigError("max_invalid_frac must lie in [0, 1]")
        return self

    def dumps(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            elif v is None:
                v = ""
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in fields(Config)}


def _coerce(key: str, text: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    default = _FIELDS[key].default
    if key == "root_bbox":
        return parse_bbox(text) if text else None
    if key in DURATION_KEYS:
        return parse_duration(text)
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"{key} expects a boolean, got {text!r}")
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{key} expects a number, got {text!r}") from None
    return text


def parse_lines(lines) -> dict:
    out = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = line.split("=", 1)
        k = k.strip()
        out[k] = _coerce(k, v)
    return out


def load_config(path=None, overrides: dict[str, str] | None = None) -> Config:
    """Defaults, then the file, then ``overrides`` (raw strings)."""
    values = {}
    if path is not None:
        values.update(parse_lines(Path(path).read_text(encoding="utf-8").splitlines()))
    for k, v in (overrides or {}).items():
        values[k] = _coerce(k, v)
    return replace(Config(), **values).validate()
