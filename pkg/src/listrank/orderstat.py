"""Joint density of order statistics and a Monte Carlo normalisation check.

For n i.i.d. draws with density f, the sorted vector has density
``n! * prod f(x_i)`` on the non-decreasing region and zero elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UsageError

MAX_N = 20
MAX_CHECK_N = 6
MIN_CHECK_SAMPLES = 100_000
_BATCH = 250_000


@dataclass(frozen=True)
class DensitySpec:
    """``uniform`` on [a, b], or ``power`` with density proportional to x**alpha on [a, b]."""

    family: str = "uniform"
    a: float = 0.0
    b: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.family not in ("uniform", "power"):
            raise UsageError(f"unknown density family {self.family!r}")
        if not self.b > self.a:
            raise UsageError(f"support needs b > a, got [{self.a}, {self.b}]")
        if self.family == "power":
            if self.a < 0:
                raise UsageError("power density needs a >= 0")
            if self.a == 0 and self.alpha <= -1:
                raise UsageError("power density on [0, b] needs alpha > -1")

    @classmethod
    def uniform(cls, a=0.0, b=1.0):
        return cls("uniform", a, b)

    @classmethod
    def power(cls, alpha, a=0.0, b=1.0):
        return cls("power", a, b, alpha)

    @property
    def norm(self) -> float:
        """Constant c with f(x) = c * x**alpha (power) or c (uniform)."""
        if self.family == "uniform":
            return 1.0 / (self.b - self.a)
        if self.alpha == -1:
            return 1.0 / math.log(self.b / self.a)
        e = self.alpha + 1.0
        return e / (self.b**e - self.a**e)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= self.a) & (x <= self.b)
        if self.family == "uniform":
            return np.where(inside, self.norm, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = self.norm * np.power(np.where(inside, x, 1.0), self.alpha)
        return np.where(inside, vals, 0.0)


class MonteCarloEstimate(NamedTuple):
    estimate: float
    stderr: float


def _check_n(n):
    if n < 1:
        raise UsageError(f"need at least one sample point, got n={n}")
    if n > MAX_N:
        raise UsageError(f"n={n} exceeds {MAX_N}; n! would overflow exact float range")


def joint_density_batch(f: DensitySpec, xs) -> np.ndarray:
    """:func:`joint_density` for each row of an (samples, n) array."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    n = xs.shape[1]
    _check_n(n)
    ordered = np.all(np.diff(xs, axis=1) >= 0, axis=1)
    dens = math.factorial(n) * np.prod(f.pdf(xs), axis=1)
    return np.where(ordered, dens, 0.0)


def joint_density(f: DensitySpec, xs) -> float:
    """Density of the order-statistic vector at ``xs``; zero unless sorted."""
    xs = np.asarray(xs, dtype=np.float64).ravel()
    return float(joint_density_batch(f, xs[None, :])[0])


def normalization_check(f: DensitySpec, n: int, samples: int = 1_000_000, seed: int = 0) -> MonteCarloEstimate:
    """Monte Carlo integral of the joint density over the box [a, b]^n.

    Points are uniform on the box; the estimate is volume times the sample
    mean of the density, and should come out at 1.
    """
    if not 1 <= n <= MAX_CHECK_N:
        raise UsageError(f"normalization_check supports 1 <= n <= {MAX_CHECK_N}, got {n}")
    if samples < MIN_CHECK_SAMPLES:
        raise UsageError(f"need at least {MIN_CHECK_SAMPLES} samples, got {samples}")
    rng = np.random.default_rng(seed)
    volume = (f.b - f.a) ** n
    total = total_sq = 0.0
    done = 0
    while done < samples:
        m = min(_BATCH, samples - done)
        vals = joint_density_batch(f, rng.uniform(f.a, f.b, size=(m, n)))
        total += float(vals.sum())
        total_sq += float(np.square(vals).sum())
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return MonteCarloEstimate(volume * mean, volume * math.sqrt(var / samples))
