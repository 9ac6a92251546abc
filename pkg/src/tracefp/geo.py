"""Geodesic primitives: great-circle distance, initial bearing, and the
temporally smoothed point distance used by the nearest-trace classifier.

Coordinates are stored as 1e-6-degree fixed-point integers so that equality,
truncation and hashing are bit-deterministic across platforms.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

EARTH_RADIUS_KM = 6371.0
COORD_SCALE = 1_000_000

# Exponent clamp for the temporal smoothing factor; beyond this the distance
# saturates instead of overflowing to inf.
EXP_CLAMP = 700.0

SECONDS_PER_UNIT = {"s": 1.0, "min": 60.0, "h": 3600.0, "day": 86400.0}

# Kilometers per degree of arc on the great circle (R * pi / 180).
KM_PER_DEG = EARTH_RADIUS_KM * math.pi / 180.0


@dataclass(frozen=True, slots=True)
class GpsPoint:
    """A GPS fix: fixed-point lat/lon plus optional integer Unix timestamp.

    Equality is exact on the fixed-point fields, never float-tolerant.
    """

    lat_e6: int
    lon_e6: int
    t: int | None = None

    def __post_init__(self):
        if not -90 * COORD_SCALE <= self.lat_e6 <= 90 * COORD_SCALE:
            raise ValueError(f"latitude out of range: {self.lat_e6 / COORD_SCALE}")
        if not -180 * COORD_SCALE <= self.lon_e6 < 180 * COORD_SCALE:
            raise ValueError(f"longitude out of range: {self.lon_e6 / COORD_SCALE}")

    @classmethod
    def from_degrees(cls, lat: float, lon: float, t: int | None = None) -> "GpsPoint":
        return cls(
            int(round(lat * COORD_SCALE)),
            int(round(lon * COORD_SCALE)),
            None if t is None else int(t),
        )

    @property
    def lat(self) -> float:
        return self.lat_e6 / COORD_SCALE

    @property
    def lon(self) -> float:
        return self.lon_e6 / COORD_SCALE


@dataclass(frozen=True, slots=True)
class TemporalScale:
    """Temporal smoothing scale tau, expressed in ``unit``.

    ``tau = inf`` disables temporal smoothing entirely (spatial-only mode).
    """

    tau: float
    unit: str = "day"

    def __post_init__(self):
        if self.unit not in SECONDS_PER_UNIT:
            raise ValueError(f"unknown time unit {self.unit!r}; use one of {sorted(SECONDS_PER_UNIT)}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    @classmethod
    def infinite(cls, unit: str = "day") -> "TemporalScale":
        return cls(math.inf, unit)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.tau)

    @property
    def seconds_per_unit(self) -> float:
        return SECONDS_PER_UNIT[self.unit]


def haversine_km(a: GpsPoint, b: GpsPoint) -> float:
    """Great-circle distance in kilometers (timestamps ignored)."""
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon) - math.radians(a.lon)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing_deg(a: GpsPoint, b: GpsPoint) -> float:
    """Initial bearing from a to b, degrees clockwise from north in [0, 360)."""
    if a.lat_e6 == b.lat_e6 and a.lon_e6 == b.lon_e6:
        raise ValueError("bearing is undefined for coincident points")
    lat1 = math.radians(a.lat)
    lat2 = math.radians(b.lat)
    dlon = math.radians(b.lon) - math.radians(a.lon)
    x = math.sin(dlon) * math.cos(lat2)
    y = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    return math.degrees(math.atan2(x, y)) % 360.0


def spatiotemporal_distance(a: GpsPoint, b: GpsPoint, scale: TemporalScale) -> float:
    """Haversine distance smoothed by the temporal gap: d_s * exp(d_t / tau).

    Reduces to plain haversine distance when the scale is infinite or the
    timestamps coincide. The exponent is clamped at EXP_CLAMP so huge
    temporal gaps saturate instead of producing non-finite values.
    """
    ds = haversine_km(a, b)
    if scale.is_infinite:
        return ds
    if a.t is None or b.t is None:
        raise ValueError("finite tau requires timestamps on both points")
    dt = abs(a.t - b.t) / scale.seconds_per_unit
    arg = min(dt / scale.tau, EXP_CLAMP)
    d = ds * math.exp(arg)
    return min(d, sys.float_info.max)
