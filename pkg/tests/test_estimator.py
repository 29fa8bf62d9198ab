import numpy as np
import pytest
from sklearn.base import clone

from adaptivepf.engine import FilterConfig, run
from adaptivepf.estimator import VolatilityParticleFilter, check_increments
from adaptivepf.models import GaussianModel, generate
from adaptivepf.rng import RngStream


def test_check_increments_shapes():
    x = check_increments([0.1, -0.2, 0.3])
    assert x.shape == (3,)
    col = check_increments(np.array([[0.1], [0.2]]))
    assert col.shape == (2,)
    with pytest.raises(ValueError):
        check_increments(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        check_increments([])
    with pytest.raises(ValueError):
        check_increments([0.1, np.nan])


def test_get_params_and_clone():
    est = VolatilityParticleFilter(variant="lw_accel", gamma=0.01, seed=5)
    params = est.get_params()
    assert params["variant"] == "lw_accel"
    assert params["gamma"] == 0.01
    cloned = clone(est)
    assert cloned.get_params() == params


def test_fit_matches_engine_run():
    series = generate(GaussianModel(sigma=0.2), 300, RngStream(60))
    cfg = FilterConfig(variant="lw", n_particles=150, seed=61)
    expected = [r.posterior_mean for r in run(series, cfg)]
    est = VolatilityParticleFilter(variant="lw", n_particles=150, seed=61)
    est.fit(series.increments)
    assert np.array_equal(est.posterior_mean_, expected)
    assert est.n_steps_ == 300
    assert len(est.posterior_variance_) == 300
    assert est.avg_phi_ is None
    assert est.ensemble_.n == 150


def test_partial_fit_continues_the_run():
    series = generate(GaussianModel(sigma=0.2), 400, RngStream(62))
    dx = series.increments
    whole = VolatilityParticleFilter(variant="lw_accel", n_particles=100, seed=63,
                                     phi_init_hi=1e-3, gamma=0.01, kappa=0.01)
    whole.fit(dx)
    parts = VolatilityParticleFilter(variant="lw_accel", n_particles=100, seed=63,
                                     phi_init_hi=1e-3, gamma=0.01, kappa=0.01)
    parts.fit(dx[:150])
    parts.partial_fit(dx[150:])
    assert np.array_equal(whole.posterior_mean_, parts.posterior_mean_)
    assert np.array_equal(whole.avg_phi_, parts.avg_phi_)
    assert np.array_equal(whole.ensemble_.sigmas, parts.ensemble_.sigmas)


def test_partial_fit_without_fit_starts_fresh():
    est = VolatilityParticleFilter(n_particles=50, seed=1)
    est.partial_fit(np.full(10, 0.1))
    assert est.n_steps_ == 10


def test_refit_resets_state():
    est = VolatilityParticleFilter(n_particles=50, seed=1)
    dx = np.full(20, 0.1)
    est.fit(dx)
    first = est.posterior_mean_.copy()
    est.fit(dx)
    assert np.array_equal(est.posterior_mean_, first)
    assert est.n_steps_ == 20


def test_invalid_config_raises_on_fit():
    est = VolatilityParticleFilter(n_particles=1)
    with pytest.raises(ValueError):
        est.fit(np.full(5, 0.1))


def test_unfitted_ensemble_access_raises():
    est = VolatilityParticleFilter()
    with pytest.raises(AttributeError):
        est.ensemble_
