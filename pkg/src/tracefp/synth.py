"""Deterministic synthetic trajectory generator.

Each trace is a bounded random walk around its own center with a uniform
time grid shared by all traces. Separation between centers and spread within
a trace are controlled independently, which is what the property tests and
the desk-scale acceptance runs need; road-network realism is out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geo import KM_PER_DEG, GpsPoint, haversine_km
from .store import Dataset, Trajectory
from .util import rng_for


@dataclass(frozen=True)
class SynthSpec:
    """Generation parameters; the seed fully determines the output."""

    n_traces: int
    points_per_trace: int
    centers: tuple[tuple[float, float], ...] | None = None
    intra_spread_km: float = 0.5
    inter_separation_km: float = 50.0
    time_step_s: int = 60
    overlap_fraction: float = 0.0
    seed: int = 0
    start_lat: float = 20.0
    start_lon: float = -40.0
    start_time: int = 1_214_870_400  # 2008-07-01T00:00:00Z

    def __post_init__(self):
        if self.n_traces < 1 or self.points_per_trace < 1:
            raise ValueError("need at least one trace and one point per trace")
        if self.intra_spread_km <= 0 or self.inter_separation_km <= 0:
            raise ValueError("spreads must be positive")
        if self.time_step_s <= 0:
            raise ValueError("time_step_s must be positive")
        if not 0.0 <= self.overlap_fraction <= 1.0:
            raise ValueError("overlap_fraction must be in [0, 1]")


def _auto_centers(spec: SynthSpec) -> list[tuple[float, float]]:
    dlon = spec.inter_separation_km / (KM_PER_DEG * math.cos(math.radians(spec.start_lat)))
    return [(spec.start_lat, spec.start_lon + i * dlon) for i in range(spec.n_traces)]


def generate(spec: SynthSpec) -> Dataset:
    """Generate a dataset of ``n_traces`` random-walk trajectories.

    With ``overlap_fraction`` > 0, the leading fraction of points of trace
    2j is copied verbatim (including timestamps) into trace 2j+1, planting
    exactly shared spatio-temporal points between designated pairs.
    """
    if spec.centers is not None:
        centers = [tuple(c) for c in spec.centers]
        if len(centers) < spec.n_traces:
            raise ValueError(f"{len(centers)} centers for {spec.n_traces} traces")
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                a = GpsPoint.from_degrees(*centers[i])
                b = GpsPoint.from_degrees(*centers[j])
                if haversine_km(a, b) < spec.inter_separation_km:
                    raise ValueError(
                        f"centers {i} and {j} are closer than inter_separation_km"
                    )
    else:
        centers = _auto_centers(spec)

    all_points: list[list[GpsPoint]] = []
    for i in range(spec.n_traces):
        clat, clon = centers[i]
        rng = rng_for(spec.seed, "trace", i)
        step_km = spec.intra_spread_km / 4.0
        east = north = 0.0
        pts = []
        for k in range(spec.points_per_trace):
            east += rng.gauss(0.0, step_km)
            north += rng.gauss(0.0, step_km)
            r = math.hypot(east, north)
            if r > spec.intra_spread_km:
                east *= spec.intra_spread_km / r
                north *= spec.intra_spread_km / r
            lat = clat + north / KM_PER_DEG
            lon = clon + east / (KM_PER_DEG * math.cos(math.radians(clat)))
            pts.append(GpsPoint.from_degrees(lat, lon, spec.start_time + k * spec.time_step_s))
        all_points.append(pts)

    if spec.overlap_fraction > 0.0:
        shared = int(round(spec.overlap_fraction * spec.points_per_trace))
        for j in range(0, spec.n_traces - 1, 2):
            all_points[j + 1][:shared] = all_points[j][:shared]

    trajs = tuple(
        Trajectory(f"u{i:03d}", tuple(pts)) for i, pts in enumerate(all_points)
    )
    return Dataset(f"synth-{spec.seed}", trajs, resolution_digits=6)
