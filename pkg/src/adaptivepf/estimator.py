"""Scikit-learn style estimator facade over the filter engine.

The filter is an online estimator of per-step volatility: `fit` consumes a
1-D array of observed increments and exposes the per-step posterior
trajectory as fitted attributes; `partial_fit` continues the same run on
further increments, which is the natural streaming interface.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .engine import FilterConfig, init_ensemble, make_streams, step

__all__ = ["VolatilityParticleFilter", "check_increments"]


def check_increments(X) -> np.ndarray:
    """Validate an increment series: finite floats, shape (n,) or (n, 1)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    if X.ndim != 1:
        raise ValueError(f"expected a 1-D increment series, got shape {X.shape}")
    if X.size == 0:
        raise ValueError("increment series is empty")
    if not np.all(np.isfinite(X)):
        raise ValueError("increment series contains non-finite values")
    return X


class VolatilityParticleFilter(BaseEstimator):
    """Particle filter estimating the volatility of observed increments.

    Parameters mirror the engine configuration; see FilterConfig. After
    `fit`, the per-step posterior mean and variance trajectories are
    available as `posterior_mean_` and `posterior_variance_`, the final
    particle state as `ensemble_`, and (for noise-carrying variants) the
    per-step average noise as `avg_phi_`.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> dx = 0.2 * rng.standard_normal(500)
    >>> f = VolatilityParticleFilter(variant="lw", n_particles=500, seed=3)
    >>> float(np.round(f.fit(dx).posterior_mean_[-1], 1))
    0.2
    """

    def __init__(
        self,
        variant: str = "lw",
        n_particles: int = 1000,
        prior_lo: float = 0.001,
        prior_hi: float = 1.0,
        init: str = "equal_spaced",
        h: float = 0.1,
        phi_fixed: float = 0.0,
        phi_init_hi: float = 0.0,
        gamma: float = 0.0,
        kappa: float = 0.0,
        sigma_floor: float = 1e-6,
        log_domain_weights: bool = False,
        resample_policy: Optional[str] = None,
        seed: int = 0,
    ):
        self.variant = variant
        self.n_particles = n_particles
        self.prior_lo = prior_lo
        self.prior_hi = prior_hi
        self.init = init
        self.h = h
        self.phi_fixed = phi_fixed
        self.phi_init_hi = phi_init_hi
        self.gamma = gamma
        self.kappa = kappa
        self.sigma_floor = sigma_floor
        self.log_domain_weights = log_domain_weights
        self.resample_policy = resample_policy
        self.seed = seed

    def _config(self) -> FilterConfig:
        return FilterConfig(
            variant=self.variant,
            n_particles=self.n_particles,
            prior_lo=self.prior_lo,
            prior_hi=self.prior_hi,
            init=self.init,
            h=self.h,
            phi_fixed=self.phi_fixed,
            phi_init_hi=self.phi_init_hi,
            gamma=self.gamma,
            kappa=self.kappa,
            sigma_floor=self.sigma_floor,
            log_domain_weights=self.log_domain_weights,
            resample_policy=self.resample_policy,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        """Run the filter over the increment series X from a fresh state."""
        config = self._config()
        config.validate()
        self._cfg = config
        self._streams = make_streams(config.seed)
        self._ensemble = init_ensemble(config, self._streams)
        self.n_steps_ = 0
        self.posterior_mean_ = np.empty(0)
        self.posterior_variance_ = np.empty(0)
        self.avg_phi_ = np.empty(0) if config.carries_phi else None
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Continue the run on further increments, preserving filter state."""
        if not hasattr(self, "_ensemble"):
            return self.fit(X)
        X = check_increments(X)
        means, variances, phis = [], [], []
        track_phi = self.avg_phi_ is not None
        for dx in X:
            result = step(self._ensemble, float(dx), self._cfg, self._streams)
            self._ensemble = result.ensemble
            means.append(result.posterior_mean)
            variances.append(result.posterior_variance)
            if track_phi:
                phis.append(float(result.ensemble.phis.mean()))
        self.n_steps_ += len(X)
        self.posterior_mean_ = np.concatenate([self.posterior_mean_, means])
        self.posterior_variance_ = np.concatenate([self.posterior_variance_, variances])
        if track_phi:
            self.avg_phi_ = np.concatenate([self.avg_phi_, phis])
        return self

    @property
    def ensemble_(self):
        """Final particle ensemble of the fitted run."""
        if not hasattr(self, "_ensemble"):
            raise AttributeError("estimator is not fitted")
        return self._ensemble
