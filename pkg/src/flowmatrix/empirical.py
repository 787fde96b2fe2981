"""Monte Carlo verification of the analytic correlation and variance claims.

Estimators draw i.i.d. (data, noise) pairs, build the scalar pairs
(state, target) coordinatewise, and report the sample statistic together
with a standard error.  Every estimator is a mean of per-sample terms, and
``std_error`` is the sample standard deviation of those terms over sqrt(n);
for the correlation this is mildly conservative when the true correlation is
nonzero, which keeps the four-sigma agreement checks honest.

The analytic correlation depends only on covariances, so any unit-variance
data distribution must reproduce it; both a standard normal and a bimodal
Gaussian mixture (normalized to unit variance, mean need not be zero) are
provided to exercise exactly that.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .analysis import pearson
from .errors import OutOfDomain
from .schedules import Schedule, coefficients


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


class DistributionKind(enum.Enum):
    STANDARD_NORMAL = "standard_normal"
    GAUSSIAN_MIXTURE = "gaussian_mixture"


@dataclass(frozen=True)
class DataDistribution:
    """A unit-variance data distribution for the Monte Carlo checks.

    ``components`` holds (weight, mean, std) triples for the mixture kind;
    weights must sum to 1 and the overall per-coordinate variance must be 1.
    """

    kind: DistributionKind
    components: tuple[tuple[float, float, float], ...] = ()
    dim: int = 1

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.kind is DistributionKind.STANDARD_NORMAL:
            return
        if not self.components:
            raise ValueError("a Gaussian mixture needs at least one component")
        weights = np.array([w for w, _, _ in self.components])
        means = np.array([m for _, m, _ in self.components])
        stds = np.array([s for _, _, s in self.components])
        if np.any(weights <= 0) or np.any(stds <= 0):
            raise ValueError("weights and stds must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {weights.sum()}")
        variance = float(weights @ (means**2 + stds**2) - (weights @ means) ** 2)
        if abs(variance - 1.0) > 1e-12:
            raise ValueError(f"mixture variance must be 1, got {variance}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw an (n, dim) array of i.i.d. coordinates."""
        if self.kind is DistributionKind.STANDARD_NORMAL:
            return rng.standard_normal((n, self.dim))
        weights = np.array([w for w, _, _ in self.components])
        means = np.array([m for _, m, _ in self.components])
        stds = np.array([s for _, _, s in self.components])
        idx = rng.choice(len(weights), size=(n, self.dim), p=weights)
        return means[idx] + stds[idx] * rng.standard_normal((n, self.dim))


def standard_normal(dim: int = 1) -> DataDistribution:
    return DataDistribution(kind=DistributionKind.STANDARD_NORMAL, dim=dim)


def two_mode_mixture(separation: float = 0.8, dim: int = 1) -> DataDistribution:
    """Equal-weight modes at +-separation, widths chosen for unit variance."""
    if not 0.0 < separation < 1.0:
        raise ValueError(f"separation must be in (0, 1), got {separation}")
    std = math.sqrt(1.0 - separation * separation)
    return DataDistribution(
        kind=DistributionKind.GAUSSIAN_MIXTURE,
        components=((0.5, -separation, std), (0.5, separation, std)),
        dim=dim,
    )


class McEstimate(NamedTuple):
    """A Monte Carlo estimate with its standard error and provenance."""

    value: float
    std_error: float
    n: int
    seed: int


class CurvePoint(NamedTuple):
    """One grid point of an analytic-vs-empirical correlation curve."""

    t: float
    analytic: float
    empirical: float
    std_error: float
    n: int
    seed: int


def _draw_pairs(
    schedule: Schedule, dist: DataDistribution, t: float, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    if n < 1000:
        raise ValueError(f"n must be >= 1000, got {n}")
    lo, hi = schedule.domain.clamped
    if not lo <= t <= hi:
        raise OutOfDomain(f"t={t} outside the clamped domain [{lo}, {hi}]")
    c = coefficients(schedule, t)
    rng = _rng(seed)
    z = dist.sample(rng, n)
    eps = rng.standard_normal(z.shape)
    return c.a11 * z + c.a12 * eps, c.a21 * z + c.a22 * eps


def estimate_pearson(
    schedule: Schedule, dist: DataDistribution, t: float, n: int, seed: int
) -> McEstimate:
    """Sample correlation between the noisy state and the target at ``t``.

    Uses the two-pass centered formula.  The estimate pools all coordinates
    (they are i.i.d.), so the reported ``n`` is ``n * dist.dim``.
    """
    state, target = _draw_pairs(schedule, dist, t, n, seed)
    x = state.ravel()
    y = target.ravel()
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(np.mean(xc * xc)))
    sy = math.sqrt(float(np.mean(yc * yc)))
    terms = xc * yc / (sx * sy)
    value = float(terms.mean())
    std_error = float(terms.std(ddof=1) / math.sqrt(terms.size))
    return McEstimate(value=value, std_error=std_error, n=terms.size, seed=seed)


def estimate_variance(
    schedule: Schedule, dist: DataDistribution, t: float, n: int, seed: int
) -> McEstimate:
    """Per-coordinate sample variance of the noisy state at ``t``.

    Expected 1 for the variance-preserving families and
    ``(1 - t)^2 + t^2`` for the rectified flow.
    """
    state, _ = _draw_pairs(schedule, dist, t, n, seed)
    x = state.ravel()
    sq = (x - x.mean()) ** 2
    count = sq.size
    value = float(sq.sum() / (count - 1))
    std_error = float(sq.std(ddof=1) / math.sqrt(count))
    return McEstimate(value=value, std_error=std_error, n=count, seed=seed)


def correlation_curve(
    schedule: Schedule,
    dist: DataDistribution,
    grid: Iterable[float],
    n: int,
    seed: int,
) -> list[CurvePoint]:
    """Analytic and empirical correlation along a grid.

    Each grid point gets an independent child seed derived deterministically
    from ``seed``, so the curve is reproducible and points are uncorrelated.
    """
    grid = [float(t) for t in grid]
    child_seeds = np.random.SeedSequence(seed).generate_state(max(len(grid), 1))
    points = []
    for t, child in zip(grid, child_seeds):
        est = estimate_pearson(schedule, dist, t, n, int(child))
        points.append(
            CurvePoint(
                t=t,
                analytic=pearson(schedule, t),
                empirical=est.value,
                std_error=est.std_error,
                n=est.n,
                seed=est.seed,
            )
        )
    return points
