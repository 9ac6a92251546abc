"""Seen-point uniqueness protocol.

For each user, random subsets of their trace are matched exactly against the
whole dataset through a hash index; uniqueness is the fraction of subsets
contained in exactly one trace. Subsets are sampled as nested prefix chains
S_1 c S_2 c ... c S_n_max, which makes the per-repetition monotonicity of
the uniqueness indicator a deterministic invariant rather than a statistical
one.

All randomness is derived from (seed, pseudo_id), so results are identical
for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geo import GpsPoint
from .motion import DEFAULT_STEPS, windowed_features
from .store import Dataset, Trajectory, point_key
from .util import det_map, mean_ci95, rng_for


@dataclass(frozen=True)
class SampleSet:
    """A small point set drawn from a single owner trajectory."""

    owner: str
    points: tuple[GpsPoint, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("sample set is empty")
        if len(set(self.points)) != len(self.points):
            raise ValueError("sample set contains duplicate points")

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class UniquenessReport:
    """Aggregated uniqueness for one subset size n."""

    n: int
    mode: str
    kind: str
    resolution_digits: int
    samples_per_user: int
    seed: int
    per_user: dict[str, float]
    mean: float
    ci95: tuple[float, float]
    excluded: tuple[str, ...] = field(default=())

    @property
    def users(self) -> int:
        return len(self.per_user)


def build_point_index(dataset: Dataset, mode: str) -> dict:
    """Map each distinct point key to the set of pseudo_ids containing it."""
    index: dict = {}
    for tr in dataset:
        for p in tr.points:
            index.setdefault(point_key(p, mode), set()).add(tr.pseudo_id)
    return index


def distinct_points(traj: Trajectory, mode: str) -> list[GpsPoint]:
    """Points of the trace deduplicated by matching key, first occurrence kept."""
    seen = set()
    out = []
    for p in traj.points:
        key = point_key(p, mode)
        if key not in seen:
            seen.add(key)
            out.append(p)
    return out


def sample_nested_subsets(
    traj: Trajectory, n_max: int, count: int, seed: int, mode: str = "spatiotemporal"
) -> list[tuple[GpsPoint, ...]]:
    """``count`` chains of ``n_max`` distinct points; every prefix is a subset.

    Each chain is a uniform random permutation prefix, so S_k is a uniform
    k-subset and S_k c S_{k+1} by construction. Deterministic given
    (seed, pseudo_id).
    """
    pool = distinct_points(traj, mode)
    if len(pool) < n_max:
        raise ValueError(
            f"trajectory {traj.pseudo_id!r} has only {len(pool)} distinct points, need {n_max}"
        )
    rng = rng_for(seed, traj.pseudo_id)
    return [tuple(rng.sample(pool, n_max)) for _ in range(count)]


def _count_unique(chains, keys_of, index, n_max: int) -> list[float]:
    """Per-n fraction of chains whose prefix matches exactly one trace."""
    unique = [0] * (n_max + 1)
    total = len(chains)
    for chain in chains:
        ids = None
        for j, item in enumerate(chain, start=1):
            postings = index[keys_of(item)]
            ids = set(postings) if ids is None else ids & postings
            if len(ids) == 1:
                unique[j] += 1
    return [unique[n] / total for n in range(n_max + 1)]


def uniqueness(
    dataset: Dataset,
    n_max: int,
    mode: str = "spatiotemporal",
    samples: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> dict[int, UniquenessReport]:
    """Average uniqueness per subset size n in 1..n_max, with 95% CI.

    Users with fewer than n_max distinct points (in the active mode) are
    excluded and listed in every report.
    """
    index = build_point_index(dataset, mode)
    eligible, excluded = [], []
    for tr in dataset:
        (eligible if len(distinct_points(tr, mode)) >= n_max else excluded).append(tr)
    if not eligible:
        raise ValueError("no trajectory has enough distinct points to sample")

    def work(tr: Trajectory):
        chains = sample_nested_subsets(tr, n_max, samples, seed, mode)
        return tr.pseudo_id, _count_unique(chains, lambda p: point_key(p, mode), index, n_max)

    rows = det_map(work, eligible, threads)
    excluded_ids = tuple(tr.pseudo_id for tr in excluded)
    reports = {}
    for n in range(1, n_max + 1):
        per_user = {pid: fracs[n] for pid, fracs in rows}
        mean, ci = mean_ci95(list(per_user.values()))
        reports[n] = UniquenessReport(
            n=n, mode=mode, kind="point", resolution_digits=dataset.resolution_digits,
            samples_per_user=samples, seed=seed, per_user=per_user, mean=mean,
            ci95=ci, excluded=excluded_ids,
        )
    return reports


def user_count_sweep(
    dataset: Dataset,
    user_counts: list[int],
    n_list: list[int],
    reps: int = 1000,
    seed: int = 0,
    mode: str = "spatiotemporal",
    threads: int = 1,
) -> dict[tuple[int, int], UniquenessReport]:
    """Uniqueness over random sub-populations of varying size.

    For each target count a uniform random sub-population is drawn and the
    plain protocol re-run; a single-trace population is 100% unique by
    definition.
    """
    ids = list(dataset.pseudo_ids)
    n_max = max(n_list)
    out: dict[tuple[int, int], UniquenessReport] = {}
    for count in user_counts:
        if count < 1 or count > len(ids):
            raise ValueError(f"user count {count} outside 1..{len(ids)}")
        rng = rng_for(seed, "sweep", count)
        chosen = sorted(rng.sample(ids, count))
        sub = Dataset(dataset.name, tuple(dataset.get(pid) for pid in chosen), dataset.resolution_digits)
        reports = uniqueness(sub, n_max, mode, reps, seed, threads)
        for n in n_list:
            out[(count, n)] = reports[n]
    return out


def movement_value_sets(
    dataset: Dataset, window_s: int, kind: str, step: float | None = None
) -> dict[str, list[float]]:
    """Per-user distinct quantized movement values, first occurrence kept."""
    if step is None:
        step = DEFAULT_STEPS[kind]
    out: dict[str, list[float]] = {}
    for tr in dataset:
        seen = set()
        vals = []
        for s in windowed_features(tr, window_s, kind, step):
            if s.quantized not in seen:
                seen.add(s.quantized)
                vals.append(s.quantized)
        out[tr.pseudo_id] = vals
    return out


def movement_uniqueness(
    dataset: Dataset,
    window_s: int,
    kind: str,
    n_max: int,
    reps: int = 1000,
    seed: int = 0,
    step: float | None = None,
    threads: int = 1,
) -> dict[int, UniquenessReport]:
    """Seen-point protocol over quantized movement values instead of points."""
    value_sets = movement_value_sets(dataset, window_s, kind, step)
    index: dict = {}
    for pid, vals in value_sets.items():
        for v in vals:
            index.setdefault(v, set()).add(pid)

    eligible = [pid for pid, vals in value_sets.items() if len(vals) >= n_max]
    excluded = tuple(pid for pid in value_sets if pid not in set(eligible))
    if not eligible:
        raise ValueError("no user has enough distinct movement values to sample")

    def work(pid: str):
        rng = rng_for(seed, "movement", kind, pid)
        chains = [tuple(rng.sample(value_sets[pid], n_max)) for _ in range(reps)]
        return pid, _count_unique(chains, lambda v: v, index, n_max)

    rows = det_map(work, eligible, threads)
    reports = {}
    for n in range(1, n_max + 1):
        per_user = {pid: fracs[n] for pid, fracs in rows}
        mean, ci = mean_ci95(list(per_user.values()))
        reports[n] = UniquenessReport(
            n=n, mode="movement", kind=kind, resolution_digits=dataset.resolution_digits,
            samples_per_user=reps, seed=seed, per_user=per_user, mean=mean,
            ci95=ci, excluded=excluded,
        )
    return reports
