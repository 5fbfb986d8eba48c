"""Homogeneous-Poisson primitives and their statistical self-checks.

These are deliberately kept separate from the Hawkes machinery so the
foundational claims (exponential inter-arrival law, memorylessness,
superposition) can be exercised on their own by the test suite and the
``verify`` command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ExponentialLaw", "MemorylessnessCheck", "memorylessness_check"]


@dataclass(frozen=True)
class ExponentialLaw:
    """Exponential inter-arrival law with the given rate (per second)."""

    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0.0:
            raise ValueError("rate must be > 0")

    def pdf(self, t: float) -> float:
        return self.rate * math.exp(-self.rate * t) if t >= 0.0 else 0.0

    def cdf(self, t: float) -> float:
        return 1.0 - math.exp(-self.rate * t) if t >= 0.0 else 0.0

    def survival(self, t: float) -> float:
        """P(tau > t) = exp(-rate * t); complements cdf exactly."""
        return math.exp(-self.rate * t) if t >= 0.0 else 1.0

    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform draws -ln(u) / rate with u in (0, 1]."""
        u = 1.0 - rng.random(size)
        return -np.log(u) / self.rate


@dataclass(frozen=True)
class MemorylessnessCheck:
    """Outcome of the conditional-survival z-test.

    ``conclusive`` is False when fewer than 100 draws survived past the
    conditioning time, in which case ``z`` is not meaningful.
    """

    z: float
    survivors: int
    conclusive: bool


def memorylessness_check(
    law: ExponentialLaw, m: float, t: float, samples: int, seed: int
) -> MemorylessnessCheck:
    """z-score of empirical P(tau > t + m | tau > m) against exp(-rate*t).

    Draws ``samples`` inter-arrival times, conditions on exceeding ``m``,
    and compares the conditional survival fraction at lag ``t`` with the
    unconditional one predicted by memorylessness.
    """
    if m <= 0.0 or t < 0.0:
        raise ValueError("need m > 0 and t >= 0")
    if samples < 10_000:
        raise ValueError("need at least 10_000 samples")
    rng = np.random.default_rng(seed)
    draws = law.sample(rng, samples)
    survived = draws[draws > m]
    k = int(survived.size)
    if k < 100:
        return MemorylessnessCheck(z=math.nan, survivors=k, conclusive=False)
    p_hat = float(np.mean(survived > m + t))
    p = law.survival(t)
    spread = math.sqrt(p * (1.0 - p) / k)
    if spread == 0.0:
        z = 0.0 if p_hat == p else math.inf
    else:
        z = (p_hat - p) / spread
    return MemorylessnessCheck(z=z, survivors=k, conclusive=True)
