"""Spatial and temporal resolution reduction, plus k-anonymity counting.

Coordinate truncation works on the fixed-point representation, so it is
exact: no float rounding artifacts, and truncation is toward zero (dropping
decimal digits of the printed value).
"""

from __future__ import annotations

from dataclasses import dataclass

from .geo import GpsPoint
from .store import Dataset, Trajectory, point_key


@dataclass(frozen=True)
class CoarseningSpec:
    """Requested resolution: decimal digits kept, optional time bucket."""

    digits: int
    time_bucket_s: int | None = None

    def __post_init__(self):
        if not 1 <= self.digits <= 6:
            raise ValueError("digits must be in 1..6")
        if self.time_bucket_s is not None and self.time_bucket_s <= 0:
            raise ValueError("time_bucket_s must be positive")

    def apply(self, dataset: Dataset) -> Dataset:
        out = truncate_resolution(dataset, self.digits)
        if self.time_bucket_s is not None:
            out = coarsen_time(out, self.time_bucket_s)
        return out


def truncate_coord_e6(value_e6: int, digits: int) -> int:
    """Truncate a fixed-point coordinate toward zero at 10^-digits degrees."""
    step = 10 ** (6 - digits)
    mag = (abs(value_e6) // step) * step
    return mag if value_e6 >= 0 else -mag


def truncate_point(p: GpsPoint, digits: int) -> GpsPoint:
    return GpsPoint(truncate_coord_e6(p.lat_e6, digits), truncate_coord_e6(p.lon_e6, digits), p.t)


def truncate_resolution(dataset: Dataset, digits: int) -> Dataset:
    """New dataset with every coordinate truncated to ``digits`` decimals."""
    if not 1 <= digits <= 6:
        raise ValueError("digits must be in 1..6")
    if digits > dataset.resolution_digits:
        raise ValueError(
            f"cannot refine: dataset resolution is {dataset.resolution_digits} digits, requested {digits}"
        )
    trajs = tuple(
        Trajectory(tr.pseudo_id, tuple(truncate_point(p, digits) for p in tr.points))
        for tr in dataset
    )
    return Dataset(dataset.name, trajs, resolution_digits=digits)


def bucket_time(t: int, bucket_s: int) -> int:
    return t - t % bucket_s


def coarsen_time(dataset: Dataset, bucket_s: int) -> Dataset:
    """New dataset with timestamps floored to ``bucket_s``-second boundaries."""
    if bucket_s <= 0:
        raise ValueError("bucket_s must be positive")
    trajs = []
    for tr in dataset:
        if not tr.has_time:
            raise ValueError(f"trajectory {tr.pseudo_id!r} has no timestamps to coarsen")
        pts = tuple(GpsPoint(p.lat_e6, p.lon_e6, bucket_time(p.t, bucket_s)) for p in tr.points)
        trajs.append(Trajectory(tr.pseudo_id, pts))
    return Dataset(dataset.name, tuple(trajs), dataset.resolution_digits)


def k_anonymity_of(dataset: Dataset, sample, mode: str = "spatiotemporal") -> int:
    """Number of trajectories containing every point of the sample exactly.

    ``sample`` is a SampleSet or any iterable of GpsPoint. This is the exact
    anonymity-set size of the sample at the dataset's current resolution.
    """
    points = getattr(sample, "points", sample)
    keys = {point_key(p, mode) for p in points}
    if not keys:
        raise ValueError("sample is empty")
    count = 0
    for tr in dataset:
        trace_keys = {point_key(p, mode) for p in tr.points}
        if keys <= trace_keys:
            count += 1
    return count
