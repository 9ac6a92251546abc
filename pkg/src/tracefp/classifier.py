"""Unseen-point re-identification attack.

A sample set P is scored against every trajectory M by the mean distance
from each point of P to its nearest point of M, where the point distance is
the temporally smoothed haversine distance. With infinite tau this is the
directed modified Hausdorff distance. Classification ranks trajectories by
that score; ties are broken by ascending pseudo_id.

The nearest-point search is exact brute force; all experiment randomness is
derived from (seed, pseudo_id, repetition) so results are independent of
worker scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geo import TemporalScale, spatiotemporal_distance
from .store import Dataset, Trajectory
from .uniqueness import SampleSet, distinct_points
from .util import det_map, mean_ci95, rng_for

DEFAULT_TAU_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class RankedMatch:
    """Full ranking of trajectories by distance to a sample set."""

    ranking: tuple[tuple[str, float], ...]
    truth: str | None = None
    skipped: tuple[str, ...] = ()

    def rank_of(self, pseudo_id: str) -> int | None:
        for i, (pid, _) in enumerate(self.ranking, start=1):
            if pid == pseudo_id:
                return i
        return None

    def hit(self, top_k: int) -> bool:
        if self.truth is None:
            raise ValueError("no ground truth attached")
        rank = self.rank_of(self.truth)
        return rank is not None and rank <= top_k


@dataclass(frozen=True)
class AccuracyResult:
    """Mean top-1/top-2 accuracy for one (n, fraction) configuration."""

    n: int
    tau: float
    tau_unit: str
    fraction: float
    users: int
    reps: int
    top1: tuple[float, tuple[float, float]]
    top2: tuple[float, tuple[float, float]]
    seed: int
    excluded: tuple[str, ...] = ()


@dataclass(frozen=True)
class TauTuneResult:
    """Grid search over tau with per-value accuracy and the chosen optimum."""

    grid: tuple[float, ...]
    unit: str
    accuracy_per_tau: tuple[tuple[float, tuple[float, float]], ...]
    tau_star: float
    excluded: tuple[str, ...] = ()


def distance_to_trace(sample, trace, scale: TemporalScale) -> float:
    """Mean distance from each sample point to its nearest trace point."""
    points = getattr(sample, "points", sample)
    trace_points = getattr(trace, "points", trace)
    if not points:
        raise ValueError("sample set is empty")
    if not trace_points:
        raise ValueError("trace is empty")
    total = 0.0
    for p in points:
        total += min(spatiotemporal_distance(p, m, scale) for m in trace_points)
    return total / len(points)


def classify(
    sample: SampleSet,
    dataset: Dataset,
    scale: TemporalScale,
    exclude_points: bool = True,
) -> RankedMatch:
    """Rank every trajectory by distance to the sample.

    With ``exclude_points`` the sample's points are removed from the owner's
    trajectory before scoring (exact fixed-point identity); an owner trace
    emptied by the removal is skipped and flagged.
    """
    removed = set(sample.points)
    entries = []
    skipped = []
    for tr in dataset:
        pts = tr.points
        if exclude_points and tr.pseudo_id == sample.owner:
            pts = tuple(m for m in pts if m not in removed)
            if not pts:
                skipped.append(tr.pseudo_id)
                continue
        entries.append((distance_to_trace(sample.points, pts, scale), tr.pseudo_id))
    entries.sort(key=lambda e: (e[0], e[1]))
    return RankedMatch(
        ranking=tuple((pid, dist) for dist, pid in entries),
        truth=sample.owner,
        skipped=tuple(skipped),
    )


def _observed_subsample(points, fraction: float, rng):
    """Uniform subsample keeping round(fraction * len) points, time order kept."""
    k = int(round(fraction * len(points)))
    if k >= len(points):
        return tuple(points)
    if k == 0:
        return ()
    idx = sorted(rng.sample(range(len(points)), k))
    return tuple(points[i] for i in idx)


def _rank_against(sample: SampleSet, observed: dict, scale: TemporalScale) -> RankedMatch:
    entries = []
    for pid in sorted(observed):
        pts = observed[pid]
        if not pts:
            continue
        entries.append((distance_to_trace(sample.points, pts, scale), pid))
    entries.sort(key=lambda e: (e[0], e[1]))
    return RankedMatch(tuple((pid, d) for d, pid in entries), truth=sample.owner)


def _sample_points(traj: Trajectory, n: int, rng) -> tuple:
    pool = distinct_points(traj, "spatiotemporal")
    return tuple(rng.sample(pool, n))


def accuracy_experiment(
    dataset: Dataset,
    scale: TemporalScale,
    n_list: list[int],
    reps: int = 100,
    seed: int = 0,
    threads: int = 1,
) -> list[AccuracyResult]:
    """Per trace: sample n points, remove them from the trace, classify.

    Reports mean top-1 and top-2 accuracy over traces with a 95% CI, for each
    n. Traces without n+1 distinct points are excluded and listed.
    """
    results = []
    for n in n_list:
        eligible, excluded = [], []
        for tr in dataset:
            (eligible if len(distinct_points(tr, "spatiotemporal")) > n else excluded).append(tr)
        if not eligible:
            raise ValueError(f"no trajectory has more than {n} distinct points")

        def work(tr: Trajectory, n=n):
            hits1 = hits2 = 0
            for rep in range(reps):
                rng = rng_for(seed, "acc", tr.pseudo_id, n, rep)
                sample = SampleSet(tr.pseudo_id, _sample_points(tr, n, rng))
                match = classify(sample, dataset, scale, exclude_points=True)
                hits1 += match.hit(1)
                hits2 += match.hit(2)
            return tr.pseudo_id, hits1 / reps, hits2 / reps

        rows = det_map(work, eligible, threads)
        results.append(AccuracyResult(
            n=n, tau=scale.tau, tau_unit=scale.unit, fraction=1.0,
            users=len(rows), reps=reps,
            top1=mean_ci95([r[1] for r in rows]),
            top2=mean_ci95([r[2] for r in rows]),
            seed=seed, excluded=tuple(tr.pseudo_id for tr in excluded),
        ))
    return results


def trace_reduction_experiment(
    dataset: Dataset,
    scale: TemporalScale,
    fractions: list[float],
    n_list: list[int],
    reps: int = 100,
    seed: int = 0,
    threads: int = 1,
) -> list[AccuracyResult]:
    """Accuracy with the observed side of each trace subsampled.

    For each attack, non-truth traces are reduced to ``fraction`` of their
    points and the truth trace to ``fraction`` of its points left after the
    sampled set P is withheld, so P never overlaps the observed data. At
    fraction 1.0 this reduces exactly to accuracy_experiment.
    """
    results = []
    for fraction in fractions:
        if not 0 < fraction <= 1:
            raise ValueError("fraction must be in (0, 1]")
        ftag = f"{fraction:.6g}"
        for n in n_list:
            eligible, excluded = [], []
            for tr in dataset:
                pool = distinct_points(tr, "spatiotemporal")
                ok = len(pool) > n and int(round(fraction * (len(tr.points) - n))) >= 1
                (eligible if ok else excluded).append(tr)
            if not eligible:
                raise ValueError(f"no trajectory survives fraction {fraction} at n={n}")

            def work(tr: Trajectory, n=n, fraction=fraction, ftag=ftag):
                hits1 = hits2 = 0
                for rep in range(reps):
                    # Same P stream as accuracy_experiment, so fraction=1.0
                    # replays it exactly.
                    rng = rng_for(seed, "acc", tr.pseudo_id, n, rep)
                    sample = SampleSet(tr.pseudo_id, _sample_points(tr, n, rng))
                    removed = set(sample.points)
                    observed = {}
                    for other in dataset:
                        obs_rng = rng_for(seed, "obs", other.pseudo_id, ftag, rep)
                        if other.pseudo_id == tr.pseudo_id:
                            rest = tuple(p for p in other.points if p not in removed)
                            observed[other.pseudo_id] = _observed_subsample(rest, fraction, obs_rng)
                        else:
                            observed[other.pseudo_id] = _observed_subsample(other.points, fraction, obs_rng)
                    match = _rank_against(sample, observed, scale)
                    hits1 += match.hit(1)
                    hits2 += match.hit(2)
                return tr.pseudo_id, hits1 / reps, hits2 / reps

            rows = det_map(work, eligible, threads)
            results.append(AccuracyResult(
                n=n, tau=scale.tau, tau_unit=scale.unit, fraction=fraction,
                users=len(rows), reps=reps,
                top1=mean_ci95([r[1] for r in rows]),
                top2=mean_ci95([r[2] for r in rows]),
                seed=seed, excluded=tuple(tr.pseudo_id for tr in excluded),
            ))
    return results


def split_trace(traj: Trajectory, split_fraction: float, seed: int):
    """Random point split into (train, test) index-disjoint halves."""
    idx = list(range(len(traj.points)))
    rng = rng_for(seed, "split", traj.pseudo_id)
    rng.shuffle(idx)
    cut = int(round(split_fraction * len(idx)))
    train = tuple(traj.points[i] for i in sorted(idx[:cut]))
    test = tuple(traj.points[i] for i in sorted(idx[cut:]))
    return train, test


def tune_tau(
    dataset: Dataset,
    grid=DEFAULT_TAU_GRID,
    unit: str = "day",
    split_fraction: float = 0.5,
    n_test: int = 3,
    reps: int = 10,
    seed: int = 0,
    threads: int = 1,
) -> TauTuneResult:
    """Grid search for tau: maximize mean top-1 accuracy on held-out points.

    Each trace is split at random into train/test halves; test points are
    classified against the training traces for each tau in the grid. Ties on
    mean accuracy resolve to the smallest tau.
    """
    grid = tuple(sorted(grid))
    if not grid:
        raise ValueError("empty tau grid")
    splits = {}
    excluded = []
    for tr in dataset:
        train, test = split_trace(tr, split_fraction, seed)
        distinct_test = list(dict.fromkeys(test))
        if len(train) == 0 or len(distinct_test) < n_test:
            excluded.append(tr.pseudo_id)
            continue
        splits[tr.pseudo_id] = (train, tuple(distinct_test))
    if not splits:
        raise ValueError("no trajectory is large enough to split")

    train_map = {pid: splits[pid][0] for pid in splits}
    scales = [TemporalScale(tau, unit) for tau in grid]

    def work(pid: str):
        hits = [0] * len(grid)
        test_pool = splits[pid][1]
        for rep in range(reps):
            rng = rng_for(seed, "tune", pid, rep)
            sample = SampleSet(pid, tuple(rng.sample(list(test_pool), n_test)))
            for i, scale in enumerate(scales):
                match = _rank_against(sample, train_map, scale)
                hits[i] += match.hit(1)
        return pid, [h / reps for h in hits]

    rows = det_map(work, sorted(splits), threads)
    accuracy_per_tau = tuple(mean_ci95([accs[i] for _, accs in rows]) for i in range(len(grid)))

    best_i = 0
    for i in range(1, len(grid)):
        if accuracy_per_tau[i][0] > accuracy_per_tau[best_i][0]:
            best_i = i
    return TauTuneResult(
        grid=grid, unit=unit, accuracy_per_tau=accuracy_per_tau,
        tau_star=grid[best_i], excluded=tuple(excluded),
    )
