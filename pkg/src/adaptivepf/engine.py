"""The particle-filter pipeline, from plain sequential importance sampling
to the accelerated-adaptation variant.

One configurable engine realises six filters that differ only in which
pipeline stages run each step:

  sis               update -> normalise
  sir               update -> normalise -> resample
  lw                ... -> resample -> kernel smooth (shrinkage only)
  lw_fixed_noise    kernel variance gets a shared additive noise term
  lw_selected_noise per-particle noise, inherited through reselection
  lw_accel          per-particle noise, multiplied each step by a
                    log-normal perturbation with damped (negative) drift

Randomness is split into purpose-specific sub-streams (initialisation,
resampling, kernel draws, noise perturbation) so that degenerate
configurations collapse onto simpler variants bit-for-bit: lw_accel with
zero initial noise and zero perturbation variance reproduces lw exactly
under the same seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from .benchmark import WeightedSample
from .models import ObservationSeries, log_transition_density, transition_density
from .rng import RngStream

__all__ = [
    "VARIANTS",
    "INIT_SCHEMES",
    "RESAMPLE_POLICIES",
    "FilterConfig",
    "ParticleEnsemble",
    "StepResult",
    "RngStreams",
    "DegenerateWeightsError",
    "make_streams",
    "init_ensemble",
    "update_weights",
    "normalise",
    "systematic_resample",
    "lw_kernel_params",
    "kernel_smooth",
    "perturb_phi",
    "step",
    "run",
]

VARIANTS = ("sis", "sir", "lw", "lw_fixed_noise", "lw_selected_noise", "lw_accel")
INIT_SCHEMES = ("equal_spaced", "random_uniform")
RESAMPLE_POLICIES = ("every_step", "never")

_SMOOTHING_VARIANTS = frozenset({"lw", "lw_fixed_noise", "lw_selected_noise", "lw_accel"})
_PER_PARTICLE_PHI_VARIANTS = frozenset({"lw_selected_noise", "lw_accel"})
_PHI_VARIANTS = frozenset({"lw_fixed_noise", "lw_selected_noise", "lw_accel"})

# Sub-stream ids; disjoint from the ids used by models.generate so a shared
# seed between data generation and filtering still yields distinct streams.
_STREAM_INIT_SIGMA = 16
_STREAM_INIT_PHI = 17
_STREAM_RESAMPLE = 18
_STREAM_KERNEL = 19
_STREAM_PHI_PERTURB = 20

_MAX_FLOOR_REDRAWS = 8


class DegenerateWeightsError(RuntimeError):
    """All particle weights vanished; the filter state carries no information.

    Raised rather than silently reinitialising: weight collapse is a
    finding the caller must surface. `step_index` is attached by run().
    """

    def __init__(self, message: str, step_index: Optional[int] = None):
        super().__init__(message)
        self.step_index = step_index


@dataclass(frozen=True)
class FilterConfig:
    """Variant selector plus every tuning constant of the pipeline.

    Fields specific to one variant are ignored by the others. The prior
    for the volatility is uniform on [prior_lo, prior_hi]; h is the
    kernel shrinkage bandwidth; phi_fixed the shared additive kernel
    noise; phi_init_hi the upper bound of the per-particle initial noise
    (0 gives the degenerate all-zero initialisation); gamma and kappa the
    variance and damping drift of the log-normal noise perturbation.
    """

    variant: str = "lw"
    n_particles: int = 1000
    prior_lo: float = 0.001
    prior_hi: float = 1.0
    init: str = "equal_spaced"
    h: float = 0.1
    phi_fixed: float = 0.0
    phi_init_hi: float = 0.0
    gamma: float = 0.0
    kappa: float = 0.0
    sigma_floor: float = 1e-6
    log_domain_weights: bool = False
    resample_policy: Optional[str] = None
    seed: int = 0

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.init not in INIT_SCHEMES:
            raise ValueError(f"unknown init {self.init!r}; expected one of {INIT_SCHEMES}")
        if self.n_particles < 2:
            raise ValueError(f"n_particles must be >= 2, got {self.n_particles}")
        if not (0.0 <= self.prior_lo < self.prior_hi):
            raise ValueError(
                f"prior range requires 0 <= prior_lo < prior_hi, got "
                f"({self.prior_lo}, {self.prior_hi})"
            )
        if not (0.0 < self.h < 1.0):
            raise ValueError(f"h must lie in (0, 1), got {self.h}")
        if not (self.sigma_floor > 0.0):
            raise ValueError(f"sigma_floor must be > 0, got {self.sigma_floor}")
        for name in ("phi_fixed", "phi_init_hi", "gamma", "kappa"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        policy = self.effective_resample_policy
        if policy not in RESAMPLE_POLICIES:
            raise ValueError(
                f"unknown resample_policy {policy!r}; expected one of {RESAMPLE_POLICIES}"
            )
        if self.variant != "sis" and policy == "never":
            raise ValueError(f"variant {self.variant!r} requires resample_policy='every_step'")

    @property
    def effective_resample_policy(self) -> str:
        """resample_policy with the variant default applied (sis never resamples)."""
        if self.resample_policy is not None:
            return self.resample_policy
        return "never" if self.variant == "sis" else "every_step"

    @property
    def smooths(self) -> bool:
        return self.variant in _SMOOTHING_VARIANTS

    @property
    def carries_phi(self) -> bool:
        return self.variant in _PHI_VARIANTS

    def with_(self, **changes) -> "FilterConfig":
        return replace(self, **changes)


@dataclass
class ParticleEnsemble:
    """N volatility hypotheses with weights and optional per-particle noise.

    log_weights is populated only in log-domain mode, where it is the
    authoritative (possibly un-normalised) state between update and
    normalise. last_dispersion records |new - old| per particle from the
    most recent kernel application and travels with each particle through
    reselection.
    """

    sigmas: np.ndarray
    weights: np.ndarray
    log_weights: Optional[np.ndarray] = None
    phis: Optional[np.ndarray] = None
    last_dispersion: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.sigmas)


@dataclass
class RngStreams:
    """Purpose-separated random streams owned by one filter run."""

    init_sigma: RngStream
    init_phi: RngStream
    resample: RngStream
    kernel: RngStream
    phi_perturb: RngStream


def make_streams(seed: int) -> RngStreams:
    root = RngStream(seed)
    return RngStreams(
        init_sigma=root.substream(_STREAM_INIT_SIGMA),
        init_phi=root.substream(_STREAM_INIT_PHI),
        resample=root.substream(_STREAM_RESAMPLE),
        kernel=root.substream(_STREAM_KERNEL),
        phi_perturb=root.substream(_STREAM_PHI_PERTURB),
    )


@dataclass
class StepResult:
    """State and measurement hooks produced by one filter step.

    pre_update / post_update expose the weighted sample at the shared
    particle locations before and after the weight update, which is what
    the tail-mass change diagnostic consumes. dispersion_reselected is
    the total kernel dispersion carried through the reselection step
    (None for variants that never smooth).
    """

    ensemble: ParticleEnsemble
    posterior_mean: float
    posterior_variance: float
    pre_update: WeightedSample
    post_update: WeightedSample
    dispersion_reselected: Optional[float] = None


def init_ensemble(config: FilterConfig, streams: RngStreams) -> ParticleEnsemble:
    """Initial ensemble per the configured scheme, with uniform weights.

    Equal spacing places particle i at prior_lo + (prior_hi - prior_lo)*i/N
    for i = 1..N; random initialisation draws i.i.d. uniforms on the prior
    range. Per-particle noise starts at U(0, phi_init_hi) draws where the
    variant uses it (all zero when phi_init_hi == 0).
    """
    config.validate()
    n = config.n_particles
    a, b = config.prior_lo, config.prior_hi
    if config.init == "equal_spaced":
        sigmas = a + (b - a) * np.arange(1, n + 1) / n
    else:
        sigmas = streams.init_sigma.uniform(a, b, size=n)
    sigmas = np.maximum(sigmas, config.sigma_floor)

    weights = np.full(n, 1.0 / n)
    log_weights = np.full(n, -math.log(n)) if config.log_domain_weights else None

    phis = None
    if config.variant in _PER_PARTICLE_PHI_VARIANTS:
        if config.phi_init_hi > 0.0:
            phis = streams.init_phi.uniform(0.0, config.phi_init_hi, size=n)
        else:
            phis = np.zeros(n)
    elif config.variant == "lw_fixed_noise":
        phis = np.full(n, config.phi_fixed)

    dispersion = np.zeros(n) if config.smooths else None
    return ParticleEnsemble(
        sigmas=sigmas,
        weights=weights,
        log_weights=log_weights,
        phis=phis,
        last_dispersion=dispersion,
    )


def update_weights(ens: ParticleEnsemble, dx: float) -> ParticleEnsemble:
    """Multiply each weight by the transition likelihood of the increment.

    Returns an un-normalised ensemble. In log-domain mode the log weights
    accumulate log densities instead; the linear weights are refreshed at
    the next normalise.
    """
    if ens.log_weights is not None:
        new_logw = ens.log_weights + log_transition_density(dx, ens.sigmas)
        return ParticleEnsemble(ens.sigmas, ens.weights, new_logw, ens.phis, ens.last_dispersion)
    new_w = ens.weights * transition_density(dx, ens.sigmas)
    return ParticleEnsemble(ens.sigmas, new_w, None, ens.phis, ens.last_dispersion)


def normalise(ens: ParticleEnsemble) -> ParticleEnsemble:
    """Rescale weights to sum to one.

    Log-domain mode subtracts the maximum before exponentiating. Raises
    DegenerateWeightsError when no information is left: zero total weight
    in linear mode, or no finite log weight.
    """
    if ens.log_weights is not None:
        m = float(np.max(ens.log_weights))
        if not math.isfinite(m):
            raise DegenerateWeightsError("all log-weights are non-finite")
        w = np.exp(ens.log_weights - m)
        total = float(w.sum())
        w = w / total
        logw = ens.log_weights - (m + math.log(total))
        return ParticleEnsemble(ens.sigmas, w, logw, ens.phis, ens.last_dispersion)
    total = float(ens.weights.sum())
    if not (total > 0.0 and math.isfinite(total)):
        raise DegenerateWeightsError(f"total weight is {total}; no positive weight remains")
    return ParticleEnsemble(
        ens.sigmas, ens.weights / total, None, ens.phis, ens.last_dispersion
    )


def _systematic_offspring(weights: np.ndarray, u_tilde: float) -> np.ndarray:
    """Parent index for each of the N evenly spaced points (k-1+u)/N."""
    n = len(weights)
    u = (np.arange(n) + u_tilde) / n
    cdf = np.cumsum(weights)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, n - 1)


def systematic_resample(ens: ParticleEnsemble, rng: RngStream) -> ParticleEnsemble:
    """Reselect N equally weighted particles by systematic resampling.

    One uniform offset places N ordered points over the cumulative weight
    partition; each particle is copied once per point falling in its
    interval, so every offspring count is floor(N*w) or floor(N*w)+1.
    Per-particle noise and dispersion travel with their parent.
    """
    idx = _systematic_offspring(ens.weights, float(rng.random()))
    n = ens.n
    return ParticleEnsemble(
        sigmas=ens.sigmas[idx],
        weights=np.full(n, 1.0 / n),
        log_weights=np.full(n, -math.log(n)) if ens.log_weights is not None else None,
        phis=ens.phis[idx] if ens.phis is not None else None,
        last_dispersion=ens.last_dispersion[idx] if ens.last_dispersion is not None else None,
    )


def lw_kernel_params(ens: ParticleEnsemble, h: float) -> tuple[np.ndarray, float]:
    """Shrunk kernel means and the base kernel variance h^2 * V.

    V and the ensemble mean are the plain (equal-weight) moments, which is
    why the kernel step runs after reselection. The shrinkage m_i =
    c*sigma_i + (1-c)*mean with c = sqrt(1-h^2) keeps the mixture mean and
    variance equal to the pre-smoothing moments.
    """
    if not (0.0 <= h < 1.0):
        raise ValueError(f"h must lie in [0, 1), got {h}")
    mean = float(ens.sigmas.mean())
    v = float(ens.sigmas.var())
    c = math.sqrt(1.0 - h * h)
    means = c * ens.sigmas + (1.0 - c) * mean
    return means, h * h * v


def kernel_smooth(
    ens: ParticleEnsemble,
    h: float,
    phi: Union[float, np.ndarray],
    rng: RngStream,
    sigma_floor: float,
) -> ParticleEnsemble:
    """Redraw each particle from its Gaussian kernel N(m_i, h^2*V + phi_i).

    phi is the additional kernel variance, shared (scalar) or per particle.
    Draws below sigma_floor are redrawn up to 8 times and then clamped,
    since the transition density requires strictly positive volatility.
    Records |new - old| per particle as the realised dispersion.
    """
    means, base_var = lw_kernel_params(ens, h)
    var = base_var + phi
    new = means + np.sqrt(var) * rng.standard_normal(ens.n)
    low = new < sigma_floor
    for _ in range(_MAX_FLOOR_REDRAWS):
        if not low.any():
            break
        k = int(low.sum())
        sd = np.sqrt(var[low]) if np.ndim(var) else math.sqrt(var)
        new[low] = means[low] + sd * rng.standard_normal(k)
        low = new < sigma_floor
    if low.any():
        new[low] = sigma_floor
    return ParticleEnsemble(
        sigmas=new,
        weights=ens.weights,
        log_weights=ens.log_weights,
        phis=ens.phis,
        last_dispersion=np.abs(new - ens.sigmas),
    )


def perturb_phi(
    ens: ParticleEnsemble, gamma: float, kappa: float, rng: RngStream
) -> ParticleEnsemble:
    """Multiply each particle's noise by an independent log-normal factor.

    The log factor is N(-kappa, gamma): gamma drives the noise random walk
    while the damping kappa pulls log-noise downward to counteract the
    survival bias of high-noise particles. Zero noise is absorbing.
    """
    if ens.phis is None:
        raise ValueError("ensemble carries no per-particle noise")
    if not (gamma >= 0.0 and kappa >= 0.0):
        raise ValueError(f"gamma and kappa must be >= 0, got gamma={gamma}, kappa={kappa}")
    factors = np.exp(-kappa + math.sqrt(gamma) * rng.standard_normal(ens.n))
    return ParticleEnsemble(
        sigmas=ens.sigmas,
        weights=ens.weights,
        log_weights=ens.log_weights,
        phis=ens.phis * factors,
        last_dispersion=ens.last_dispersion,
    )


def _weighted_moments(ens: ParticleEnsemble) -> tuple[float, float]:
    mean = float(np.dot(ens.weights, ens.sigmas))
    d = ens.sigmas - mean
    return mean, float(np.dot(ens.weights, d * d))


def step(
    ens: ParticleEnsemble, dx: float, config: FilterConfig, streams: RngStreams
) -> StepResult:
    """Advance the filter by one observation, per the configured variant."""
    pre = WeightedSample(ens.sigmas, ens.weights)
    ens = normalise(update_weights(ens, dx))
    post = WeightedSample(ens.sigmas, ens.weights)

    dispersion_reselected = None
    if config.effective_resample_policy == "every_step":
        ens = systematic_resample(ens, streams.resample)
        if config.smooths:
            dispersion_reselected = float(ens.last_dispersion.sum())

    if config.variant == "lw_accel":
        ens = perturb_phi(ens, config.gamma, config.kappa, streams.phi_perturb)

    if config.smooths:
        phi: Union[float, np.ndarray]
        if config.variant == "lw":
            phi = 0.0
        elif config.variant == "lw_fixed_noise":
            phi = config.phi_fixed
        else:
            phi = ens.phis
        ens = kernel_smooth(ens, config.h, phi, streams.kernel, config.sigma_floor)

    mean, var = _weighted_moments(ens)
    return StepResult(
        ensemble=ens,
        posterior_mean=mean,
        posterior_variance=var,
        pre_update=pre,
        post_update=post,
        dispersion_reselected=dispersion_reselected,
    )


def run(
    series: Union[ObservationSeries, np.ndarray, Iterable[float]],
    config: FilterConfig,
) -> Iterator[StepResult]:
    """Run the configured filter over a series, yielding one result per step.

    Accepts an ObservationSeries or a bare increment array. Deterministic
    under a fixed config seed. A DegenerateWeightsError raised mid-run
    carries the 1-based index of the failing step.
    """
    if isinstance(series, ObservationSeries):
        increments = series.increments
    else:
        increments = np.asarray(series, dtype=np.float64)
    if len(increments) == 0:
        raise ValueError("series has no increments")
    config.validate()
    streams = make_streams(config.seed)
    ens = init_ensemble(config, streams)
    for t, dx in enumerate(increments, start=1):
        try:
            result = step(ens, float(dx), config, streams)
        except DegenerateWeightsError as err:
            err.step_index = t
            raise
        ens = result.ensemble
        yield result
