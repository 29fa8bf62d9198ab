import numpy as np
import pytest
from scipy.stats import chi2

from adaptivepf.benchmark import (
    BenchmarkPosterior,
    WeightedSample,
    benchmark_from_series,
    empirical_cdf,
    ks_statistic,
    theoretical_cdf,
)
from adaptivepf.models import GaussianModel, ObservationSeries, generate
from adaptivepf.rng import RngStream


def _series_from_increments(dx):
    dx = np.asarray(dx, dtype=np.float64)
    return ObservationSeries(values=np.concatenate([[0.0], np.cumsum(dx)]), increments=dx)


def test_benchmark_from_series_arithmetic():
    bp = benchmark_from_series(_series_from_increments([1.0, -1.0, 1.0, -1.0]), upto=4)
    assert bp.sigma_hat_sq == 1.0
    assert bp.n == 4
    zero = benchmark_from_series(_series_from_increments(np.zeros(10)), upto=10)
    assert zero.sigma_hat_sq == 0.0
    assert zero.n == 10


def test_benchmark_needs_two_observations():
    with pytest.raises(ValueError):
        benchmark_from_series(_series_from_increments([1.0, 2.0]), upto=1)
    with pytest.raises(ValueError):
        BenchmarkPosterior(sigma_hat_sq=1.0, n=1)


def test_theoretical_cdf_limits_and_errors():
    bp = BenchmarkPosterior(sigma_hat_sq=1.0, n=5)
    assert theoretical_cdf(bp, 1e-8) == pytest.approx(0.0, abs=1e-12)
    assert theoretical_cdf(bp, 1e8) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        theoretical_cdf(bp, 0.0)
    with pytest.raises(ValueError):
        theoretical_cdf(bp, -1.0)


@pytest.mark.parametrize("n", [2, 10, 100, 10_000])
def test_theoretical_cdf_monotone(n):
    bp = BenchmarkPosterior(sigma_hat_sq=0.04, n=n)
    sigmas = np.linspace(1e-3, 2.0, 10_000)
    vals = theoretical_cdf(bp, sigmas)
    assert np.all(np.diff(vals) >= 0.0)
    assert np.all((0.0 <= vals) & (vals <= 1.0))


def test_theoretical_cdf_against_monte_carlo_oracle():
    # draw X ~ chi2(4), form sqrt(n sigma_hat^2 / X), compare P(<= 1)
    bp = BenchmarkPosterior(sigma_hat_sq=1.0, n=5)
    rng = np.random.default_rng(41)
    x = rng.chisquare(4, size=1_000_000)
    frac = float(np.mean(np.sqrt(5.0 / x) <= 1.0))
    assert abs(theoretical_cdf(bp, 1.0) - frac) < 0.002


def test_weighted_sample_validation():
    with pytest.raises(ValueError):
        WeightedSample(np.array([1.0, 2.0]), np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        WeightedSample(np.array([1.0]), np.array([-1.0]))
    with pytest.raises(ValueError):
        WeightedSample(np.array([]), np.array([]))


def test_empirical_cdf_values():
    sample = WeightedSample(np.array([1.0, 2.0, 3.0]), np.array([0.2, 0.3, 0.5]))
    assert empirical_cdf(sample, 0.5) == 0.0
    assert empirical_cdf(sample, 3.5) == pytest.approx(1.0, abs=1e-12)
    assert empirical_cdf(sample, 2.0) == pytest.approx(0.5, abs=1e-12)


def test_empirical_cdf_is_a_cdf():
    rng = np.random.default_rng(42)
    for _ in range(20):
        pts = rng.uniform(0.0, 1.0, size=50)
        w = rng.uniform(0.0, 1.0, size=50)
        sample = WeightedSample(pts, w / w.sum())
        grid = np.linspace(-0.5, 1.5, 101)
        vals = [empirical_cdf(sample, g) for g in grid]
        assert vals[0] == 0.0
        assert vals[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(vals) >= -1e-15)


def test_ks_single_point_at_median():
    bp = BenchmarkPosterior(sigma_hat_sq=0.04, n=50)
    # invert F(sigma) = 0.5: chi2 cdf equals 0.5 at its median m, sigma = sqrt(n s2 / m)
    m = chi2.ppf(0.5, bp.n - 1)
    sigma_star = float(np.sqrt(bp.n * bp.sigma_hat_sq / m))
    sample = WeightedSample(np.array([sigma_star]), np.array([1.0]))
    assert ks_statistic(sample, bp) == pytest.approx(0.5, abs=1e-9)


def test_ks_single_point_in_far_tail():
    bp = BenchmarkPosterior(sigma_hat_sq=0.04, n=1000)
    sample = WeightedSample(np.array([100.0]), np.array([1.0]))
    assert ks_statistic(sample, bp) > 0.999


def test_ks_fine_grid_construction_is_small():
    bp = BenchmarkPosterior(sigma_hat_sq=0.04, n=200)
    m = 1000
    qs = (np.arange(m) + 0.5) / m
    # quantiles of F via the chi-square quantile transform
    pts = np.sqrt(bp.n * bp.sigma_hat_sq / chi2.ppf(1.0 - qs, bp.n - 1))
    sample = WeightedSample(pts, np.full(m, 1.0 / m))
    assert ks_statistic(sample, bp) < 0.01


def test_ks_bounded_and_handles_ties():
    rng = np.random.default_rng(43)
    bp = BenchmarkPosterior(sigma_hat_sq=0.04, n=25)
    for _ in range(50):
        pts = rng.choice([0.1, 0.2, 0.3, 0.4], size=30)
        w = rng.uniform(0.0, 1.0, size=30)
        sample = WeightedSample(pts, w / w.sum())
        ks = ks_statistic(sample, bp)
        assert 0.0 <= ks <= 1.0


def test_ks_tie_weights_aggregate():
    # two particles at one location act as one jump of their summed weight
    bp = BenchmarkPosterior(sigma_hat_sq=0.04, n=50)
    a = WeightedSample(np.array([0.2, 0.2]), np.array([0.4, 0.6]))
    b = WeightedSample(np.array([0.2]), np.array([1.0]))
    assert ks_statistic(a, bp) == pytest.approx(ks_statistic(b, bp), abs=1e-15)


def test_ks_on_filter_like_sample():
    series = generate(GaussianModel(sigma=0.2), 3000, RngStream(44))
    bp = benchmark_from_series(series, 3000)
    # dense equal-weight sample drawn from the benchmark itself
    rng = np.random.default_rng(45)
    draws = np.sqrt(bp.n * bp.sigma_hat_sq / rng.chisquare(bp.n - 1, size=4000))
    sample = WeightedSample(draws, np.full(4000, 1.0 / 4000))
    assert ks_statistic(sample, bp) < 0.05
