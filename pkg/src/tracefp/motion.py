"""Windowed movement signatures: total distance, average speed and
distance-weighted average direction of travel.

The direction of a window is the bearing of the vector sum of its segment
displacements, each segment contributing its haversine length at its initial
bearing. A plain distance-weighted arithmetic mean of bearings gives a
different number (75.00 instead of 75.36 on the 1 km @ 45 / 2 km @ 90
reference case) and is deliberately not used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .geo import haversine_km, initial_bearing_deg
from .store import Trajectory

KINDS = ("distance_km", "speed_kmh", "direction_deg")

# Quantization steps used for exact-match uniqueness over continuous values.
DEFAULT_STEPS = {"distance_km": 0.01, "speed_kmh": 1.0, "direction_deg": 1.0}


@dataclass(frozen=True)
class MotionSample:
    """One movement feature value for one time window."""

    window_start: int
    kind: str
    value: float
    quantized: float


def quantize_value(value: float, step: float) -> float:
    """Floor ``value`` to the nearest multiple of ``step``."""
    if step <= 0:
        raise ValueError("quantization step must be positive")
    return math.floor(value / step) * step


def weighted_direction_deg(lengths_km: Sequence[float], bearings_deg: Sequence[float]) -> float:
    """Distance-weighted average direction: bearing of the displacement sum."""
    if len(lengths_km) != len(bearings_deg) or not lengths_km:
        raise ValueError("need equal-length, non-empty lengths and bearings")
    east = 0.0
    north = 0.0
    for length, bearing in zip(lengths_km, bearings_deg):
        rad = math.radians(bearing)
        east += length * math.sin(rad)
        north += length * math.cos(rad)
    if east == 0.0 and north == 0.0:
        raise ValueError("zero net displacement has no direction")
    return math.degrees(math.atan2(east, north)) % 360.0


def windowed_features(
    traj: Trajectory,
    window_s: int,
    kind: str,
    step: float | None = None,
) -> list[MotionSample]:
    """Movement samples over consecutive windows anchored at the first fix.

    The trajectory is partitioned into [k*w, (k+1)*w) windows starting at its
    first timestamp. Windows with fewer than 2 points emit no sample, and so
    do degenerate ones (zero elapsed time for speed, zero net displacement
    for direction).
    """
    if not traj.has_time:
        raise ValueError("windowed features require timestamps")
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    if kind not in KINDS:
        raise ValueError(f"unknown feature kind {kind!r}; use one of {KINDS}")
    if step is None:
        step = DEFAULT_STEPS[kind]

    t0 = traj.points[0].t
    windows: dict[int, list] = {}
    for p in traj.points:
        windows.setdefault((p.t - t0) // window_s, []).append(p)

    samples = []
    for idx in sorted(windows):
        pts = windows[idx]
        if len(pts) < 2:
            continue
        value = None
        if kind == "direction_deg":
            east = 0.0
            north = 0.0
            for a, b in zip(pts, pts[1:]):
                length = haversine_km(a, b)
                if length == 0.0:
                    continue
                rad = math.radians(initial_bearing_deg(a, b))
                east += length * math.sin(rad)
                north += length * math.cos(rad)
            if east != 0.0 or north != 0.0:
                value = math.degrees(math.atan2(east, north)) % 360.0
        else:
            dist = math.fsum(haversine_km(a, b) for a, b in zip(pts, pts[1:]))
            if kind == "distance_km":
                value = dist
            else:
                elapsed_s = pts[-1].t - pts[0].t
                if elapsed_s > 0:
                    value = dist / (elapsed_s / 3600.0)
        if value is None:
            continue
        samples.append(
            MotionSample(t0 + idx * window_s, kind, value, quantize_value(value, step))
        )
    return samples


def quantize_features(samples: Iterable[MotionSample], step: float) -> list[MotionSample]:
    """Re-quantize samples at a different per-kind step."""
    return [replace(s, quantized=quantize_value(s.value, step)) for s in samples]
