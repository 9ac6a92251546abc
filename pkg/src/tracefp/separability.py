"""Geometric separability of labeled point sets.

GSI is the fraction of points whose nearest neighbor (excluding the point
itself, by identity) belongs to the same class; the class-averaged variant
averages the per-class fractions without size weighting, so small classes
count as much as large ones. Distance ties resolve to the neighbor with the
lowest (pseudo_id, timestamp).
"""

from __future__ import annotations

from dataclasses import dataclass

from .geo import GpsPoint, TemporalScale, haversine_km, spatiotemporal_distance
from .store import Dataset
from .util import ecdf, mean_ci95, rng_for


@dataclass(frozen=True)
class SeparabilityReport:
    """Per-class separability fractions plus the class-averaged index."""

    per_class: dict[str, float]
    agsi: float
    gsi_binary: float | None
    mode: str
    scale: TemporalScale | None
    class_sizes: dict[str, int]


def _sort_key(item):
    p, label = item
    return (label, p.t if p.t is not None else 0, p.lat_e6, p.lon_e6)


def _nn_same_class(labeled, mode: str, scale: TemporalScale | None) -> list[tuple[str, bool]]:
    """For each point, whether its nearest neighbor shares its label.

    ``labeled`` must be pre-sorted by (label, timestamp); keeping the first
    minimal neighbor then implements the ascending-id tie rule.
    """
    if len(labeled) < 2:
        raise ValueError("separability needs at least 2 points")
    if mode == "spatial":
        dist = lambda a, b: haversine_km(a, b)
    elif mode == "spatiotemporal":
        if scale is None or scale.is_infinite:
            raise ValueError("spatiotemporal separability requires a finite scale")
        dist = lambda a, b: spatiotemporal_distance(a, b, scale)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    out = []
    for i, (p, label) in enumerate(labeled):
        best = None
        best_j = -1
        for j, (q, _) in enumerate(labeled):
            if j == i:
                continue
            d = dist(p, q)
            if best is None or d < best:
                best = d
                best_j = j
        out.append((label, labeled[best_j][1] == label))
    return out


def gsi(labeled_points, mode: str = "spatial", scale: TemporalScale | None = None) -> float:
    """Fraction of points whose nearest neighbor shares their label."""
    labeled = sorted(labeled_points, key=_sort_key)
    flags = _nn_same_class(labeled, mode, scale)
    return sum(same for _, same in flags) / len(flags)


def agsi(
    dataset: Dataset,
    mode: str = "spatial",
    scale: TemporalScale | None = None,
    max_points_per_class: int | None = 2000,
    seed: int = 0,
) -> SeparabilityReport:
    """Class-averaged separability over a dataset, one class per pseudo_id.

    Classes larger than ``max_points_per_class`` are uniformly subsampled
    (recorded via class_sizes) to keep the all-pairs search tractable.
    """
    labeled: list[tuple[GpsPoint, str]] = []
    class_sizes: dict[str, int] = {}
    for tr in dataset:
        pts = tr.points
        if max_points_per_class is not None and len(pts) > max_points_per_class:
            rng = rng_for(seed, "cap", tr.pseudo_id)
            idx = sorted(rng.sample(range(len(pts)), max_points_per_class))
            pts = tuple(pts[i] for i in idx)
        class_sizes[tr.pseudo_id] = len(pts)
        labeled.extend((p, tr.pseudo_id) for p in pts)

    labeled.sort(key=_sort_key)
    flags = _nn_same_class(labeled, mode, scale)

    hits: dict[str, int] = {pid: 0 for pid in class_sizes}
    for label, same in flags:
        hits[label] += same
    per_class = {pid: hits[pid] / class_sizes[pid] for pid in class_sizes}
    overall = sum(same for _, same in flags) / len(flags)
    mean, _ = mean_ci95(list(per_class.values()))
    return SeparabilityReport(
        per_class=per_class, agsi=mean, gsi_binary=overall,
        mode=mode, scale=scale, class_sizes=class_sizes,
    )


def separability_cdf(report: SeparabilityReport) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF over the per-class fractions."""
    if not report.per_class:
        raise ValueError("empty separability report")
    return ecdf(list(report.per_class.values()))
