"""Particle filters with accelerated adaptation for online volatility
learning and change detection.

The package spans the full pipeline: synthetic observation processes, the
exact constant-volatility benchmark posterior and its KS distance, six
filter variants sharing one engine, per-step diagnostics, pinned
experiment presets, a CLI, and a scikit-learn style estimator facade.
"""

from .benchmark import (
    BenchmarkPosterior,
    WeightedSample,
    benchmark_from_series,
    empirical_cdf,
    ks_statistic,
    theoretical_cdf,
)
from .diagnostics import (
    DiagnosticsRecord,
    average_phi,
    edge_mass,
    realized_dispersion_total,
    zero_weight_proportion,
)
from .engine import (
    DegenerateWeightsError,
    FilterConfig,
    ParticleEnsemble,
    StepResult,
    init_ensemble,
    kernel_smooth,
    lw_kernel_params,
    make_streams,
    normalise,
    perturb_phi,
    run,
    step,
    systematic_resample,
    update_weights,
)
from .estimator import VolatilityParticleFilter, check_increments
from .harness import ExperimentPlan, ExperimentResult, ks_convergence, run_experiment, run_sweep
from .models import (
    GaussianModel,
    ModelSpec,
    ObservationSeries,
    RegimeShiftModel,
    StochVolModel,
    generate,
    log_transition_density,
    read_series_csv,
    transition_density,
    write_series_csv,
)
from .presets import PRESETS, KsConvergenceStudy, preset_names, run_preset
from .rng import RngStream, chi_square_cdf, draw_normal, draw_uniform

__version__ = "0.1.0"

__all__ = [
    "BenchmarkPosterior",
    "WeightedSample",
    "benchmark_from_series",
    "empirical_cdf",
    "ks_statistic",
    "theoretical_cdf",
    "DiagnosticsRecord",
    "average_phi",
    "edge_mass",
    "realized_dispersion_total",
    "zero_weight_proportion",
    "DegenerateWeightsError",
    "FilterConfig",
    "ParticleEnsemble",
    "StepResult",
    "init_ensemble",
    "kernel_smooth",
    "lw_kernel_params",
    "make_streams",
    "normalise",
    "perturb_phi",
    "run",
    "step",
    "systematic_resample",
    "update_weights",
    "VolatilityParticleFilter",
    "check_increments",
    "ExperimentPlan",
    "ExperimentResult",
    "ks_convergence",
    "run_experiment",
    "run_sweep",
    "GaussianModel",
    "ModelSpec",
    "ObservationSeries",
    "RegimeShiftModel",
    "StochVolModel",
    "generate",
    "log_transition_density",
    "read_series_csv",
    "transition_density",
    "write_series_csv",
    "PRESETS",
    "KsConvergenceStudy",
    "preset_names",
    "run_preset",
    "RngStream",
    "chi_square_cdf",
    "draw_normal",
    "draw_uniform",
]
