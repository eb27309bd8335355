"""Statistics helpers shared by the Monte Carlo checks."""

from __future__ import annotations

import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.stats


def is_non_increasing(values: Sequence[Optional[float]], rtol: float = 1e-9) -> bool:
    """
    Whether the non-missing values never increase by more than ``rtol`` (relative).
    """
    present = [float(value) for value in values if value is not None]
    return all(b <= a + rtol * abs(a) for a, b in zip(present, present[1:]))


def batch_generators(seed: int, count: int) -> List[np.random.Generator]:
    """
    Independent counter-based streams, one per batch.

    Each batch gets its own ``Philox`` generator spawned from
    ``SeedSequence(seed)``, so results do not depend on how batches are
    distributed over workers.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def batch_sizes(total: int, batch_size: int) -> List[int]:
    """Split ``total`` into fixed-size batches (the last may be shorter)."""
    full, rest = divmod(total, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


class PowerSums:
    """
    Correctly rounded running sums of x, x**2, ... for moment estimates.

    Partial sums from separate batches merge exactly, independent of order.
    """

    def __init__(self, order: int = 2):
        self.order = order
        self.count = 0
        self._partials: List[List[float]] = [[] for _ in range(order)]

    def add(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float).ravel()
        self.count += len(values)
        power = np.ones_like(values)
        for k in range(self.order):
            power = power * values
            self._partials[k].append(math.fsum(power))

    def merge(self, other: "PowerSums") -> None:
        self.count += other.count
        for mine, theirs in zip(self._partials, other._partials):
            mine.extend(theirs)

    def total(self, k: int) -> float:
        """Sum of ``x**k`` (k >= 1)."""
        return math.fsum(self._partials[k - 1])

    @property
    def mean(self) -> float:
        return self.total(1) / self.count

    def moment(self, k: int) -> float:
        return self.total(k) / self.count

    def variance_of_power(self, k: int) -> float:
        """Unbiased sample variance of ``x**k``; needs ``order >= 2k``."""
        if self.count < 2:
            return 0.0
        mean = self.moment(k)
        value = (self.total(2 * k) - self.count * mean * mean) / (self.count - 1)
        return max(value, 0.0)


def normal_ci(
    mean: float, variance: float, count: int, level: float = 0.99
) -> Tuple[float, float]:
    """Normal-approximation confidence interval of a sample mean."""
    z = scipy.stats.norm.ppf(0.5 + level / 2.0)
    half = z * math.sqrt(max(variance, 0.0) / count)
    return mean - half, mean + half


def within(value: float, interval: Iterable[float]) -> bool:
    low, high = interval
    return low <= value <= high
