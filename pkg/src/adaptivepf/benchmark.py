"""Closed-form posterior for the constant-volatility model, and the KS distance.

For Gaussian increments the posterior of the volatility given n observations
is known exactly: n * sigma_hat^2 / sigma^2 follows a chi-square law with
n - 1 degrees of freedom, where sigma_hat^2 is the maximum-likelihood
variance estimate. That gives a benchmark CDF against which any weighted
particle approximation can be scored with a Kolmogorov-Smirnov statistic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ObservationSeries
from .rng import chi_square_cdf

__all__ = [
    "BenchmarkPosterior",
    "WeightedSample",
    "benchmark_from_series",
    "theoretical_cdf",
    "empirical_cdf",
    "ks_statistic",
]


@dataclass(frozen=True)
class BenchmarkPosterior:
    """Sufficient statistics of the exact volatility posterior.

    sigma_hat_sq is the ML variance estimate (mean squared increment);
    n is the number of observations, at least 2 so the chi-square law
    has a positive number of degrees of freedom.
    """

    sigma_hat_sq: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 observations, got n={self.n}")
        if not (self.sigma_hat_sq >= 0.0 and np.isfinite(self.sigma_hat_sq)):
            raise ValueError(f"sigma_hat_sq must be finite and >= 0, got {self.sigma_hat_sq}")


@dataclass
class WeightedSample:
    """Particle locations with normalised nonnegative weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.points.shape != self.weights.shape or self.points.ndim != 1:
            raise ValueError("points and weights must be 1-D arrays of equal length")
        if len(self.points) == 0:
            raise ValueError("sample must be nonempty")
        if np.any(self.weights < 0.0):
            raise ValueError("weights must be nonnegative")
        total = float(self.weights.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (within 1e-12), got {total}")


def benchmark_from_series(series: ObservationSeries, upto: int) -> BenchmarkPosterior:
    """Benchmark posterior from the first `upto` increments of a series."""
    if upto < 2:
        raise ValueError(f"need at least 2 observations, got upto={upto}")
    if upto > series.n_steps:
        raise ValueError(f"series has only {series.n_steps} increments, got upto={upto}")
    dx = series.increments[:upto]
    return BenchmarkPosterior(sigma_hat_sq=float(np.mean(dx * dx)), n=upto)


def theoretical_cdf(bp: BenchmarkPosterior, sigma):
    """Exact posterior CDF F(sigma) = P(volatility <= sigma | data).

    Derived by the probability transform from the chi-square law:
    F(sigma) = 1 - ChiSqCDF_{n-1}(n * sigma_hat^2 / sigma^2). Monotone
    nondecreasing in sigma with limits 0 and 1.
    """
    sigma_arr = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma_arr <= 0.0):
        raise ValueError("sigma must be > 0")
    out = 1.0 - chi_square_cdf(bp.n * bp.sigma_hat_sq / (sigma_arr * sigma_arr), bp.n - 1)
    if np.ndim(out) == 0:
        return float(out)
    return out


def empirical_cdf(sample: WeightedSample, sigma: float) -> float:
    """Weighted proportion of sample points at or below sigma."""
    mass = float(sample.weights[sample.points <= sigma].sum())
    return min(max(mass, 0.0), 1.0)


def ks_statistic(sample: WeightedSample, bp: BenchmarkPosterior) -> float:
    """Supremum distance between the weighted empirical CDF and the benchmark.

    The empirical CDF is a right-continuous step function and the benchmark
    CDF is continuous, so the supremum is attained at particle locations:
    at each sorted point compare the benchmark against the step values just
    before and after the jump. No grid scan is involved.
    """
    order = np.argsort(sample.points, kind="stable")
    pts = sample.points[order]
    cum = np.cumsum(sample.weights[order])
    f_theory = theoretical_cdf(bp, pts)
    above = np.abs(cum - f_theory)
    below = np.abs(np.concatenate([[0.0], cum[:-1]]) - f_theory)
    ks = max(float(above.max()), float(below.max()))
    return min(ks, 1.0)
