"""Shared helpers: seeded RNG derivation, confidence intervals, deterministic
parallel mapping and empirical CDFs."""

from __future__ import annotations

import hashlib
import math
import random
import statistics
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

Z95 = 1.96


def derive_seed(*parts) -> int:
    """Stable 64-bit seed derived from the given parts.

    Unlike the builtin ``hash``, this is identical across processes and
    platforms, which is what makes experiment results schedule-independent.
    """
    payload = "\x1f".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(*parts) -> random.Random:
    """Independent RNG stream keyed by the given parts."""
    return random.Random(derive_seed(*parts))


def mean_ci95(values: Sequence[float]) -> tuple[float, tuple[float, float]]:
    """Mean and normal-approximation 95% CI (mean +/- 1.96 s / sqrt(n)).

    With fewer than two values the interval collapses to the mean.
    """
    vals = list(values)
    if not vals:
        raise ValueError("mean_ci95 of empty sequence")
    mean = math.fsum(vals) / len(vals)
    if len(vals) < 2:
        return mean, (mean, mean)
    half = Z95 * statistics.stdev(vals) / math.sqrt(len(vals))
    return mean, (mean - half, mean + half)


def det_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map ``fn`` over ``items`` preserving order.

    Each work item must carry its own derived RNG state, so the result is
    identical for any thread count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def ecdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF as (x, F(x)) pairs at the data points."""
    vals = sorted(values)
    if not vals:
        raise ValueError("ecdf of empty sequence")
    total = len(vals)
    out = []
    seen = 0
    for i, x in enumerate(vals):
        seen += 1
        if i + 1 == total or vals[i + 1] != x:
            out.append((x, seen / total))
    return out
