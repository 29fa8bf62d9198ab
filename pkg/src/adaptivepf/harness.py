"""Experiment orchestration: plans, per-step records, sweeps, CSV streams.

A plan pairs a data model (or an externally supplied series) with a filter
configuration and a set of requested outputs. Running a plan yields one
diagnostics record per recorded step; records serialise to CSV rows with
empty fields for outputs that were not requested.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from . import engine
from .benchmark import WeightedSample, benchmark_from_series, ks_statistic, BenchmarkPosterior
from .diagnostics import (
    DiagnosticsRecord,
    average_phi,
    edge_mass,
    realized_dispersion_total,
    zero_weight_proportion,
)
from .engine import DegenerateWeightsError, FilterConfig
from .models import GaussianModel, ModelSpec, ObservationSeries, generate
from .rng import RngStream

__all__ = [
    "OUTPUT_NAMES",
    "RUN_CSV_HEADER",
    "ExperimentPlan",
    "ExperimentResult",
    "iter_records",
    "run_experiment",
    "ks_convergence",
    "run_sweep",
    "write_records_csv",
    "records_to_rows",
    "format_value",
]

OUTPUT_NAMES = ("posterior", "ks", "zero_weight", "edge_mass", "dispersion", "avg_phi")

RUN_CSV_HEADER = [
    "t",
    "mean",
    "variance",
    "ks",
    "zero_weight_prop",
    "edge_mass_lo",
    "edge_mass_hi",
    "dispersion",
    "avg_phi",
]


@dataclass(frozen=True)
class ExperimentPlan:
    """One filter run over one data series, with requested outputs.

    Either `model` (with `n_steps` and `data_seed`) describes the series to
    simulate, or a prebuilt series is passed to the runner directly. The
    KS output needs the constant-volatility benchmark, so it is only valid
    against Gaussian data; zero-weight counting needs linear-domain
    weights; avg_phi needs a variant that carries the noise parameter.
    """

    filter: FilterConfig
    model: Optional[ModelSpec] = None
    n_steps: Optional[int] = None
    data_seed: int = 0
    record_every: int = 1
    outputs: tuple[str, ...] = ("posterior",)
    edge_mass_p: float = 0.05
    preset_name: Optional[str] = None

    def validate(self, series: Optional[ObservationSeries] = None) -> None:
        self.filter.validate()
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        unknown = set(self.outputs) - set(OUTPUT_NAMES)
        if unknown:
            raise ValueError(f"unknown outputs {sorted(unknown)}; expected subset of {OUTPUT_NAMES}")
        if not (0.0 < self.edge_mass_p < 0.5):
            raise ValueError(f"edge_mass_p must lie in (0, 0.5), got {self.edge_mass_p}")
        if "ks" in self.outputs:
            if self.model is not None and not isinstance(self.model, GaussianModel):
                raise ValueError("ks output requires Gaussian data (no benchmark otherwise)")
            if series is not None and series.truth is not None and not series.has_constant_truth():
                raise ValueError("ks output requires Gaussian data (series truth is not constant)")
        if "zero_weight" in self.outputs and self.filter.log_domain_weights:
            raise ValueError("zero_weight output requires linear-domain weights")
        if "avg_phi" in self.outputs and not self.filter.carries_phi:
            raise ValueError(f"avg_phi output requires a noise-carrying variant, got {self.filter.variant!r}")
        if self.model is None and series is None:
            raise ValueError("plan needs either a model or an explicit series")
        if self.model is not None and series is None and (self.n_steps is None or self.n_steps < 1):
            raise ValueError("plan with a model needs n_steps >= 1")


@dataclass
class ExperimentResult:
    records: list[DiagnosticsRecord] = field(default_factory=list)
    aborted_at: Optional[int] = None
    abort_reason: Optional[str] = None


def _series_for(plan: ExperimentPlan, series: Optional[ObservationSeries]) -> ObservationSeries:
    if series is not None:
        return series
    return generate(plan.model, plan.n_steps, RngStream(plan.data_seed))


def iter_records(
    plan: ExperimentPlan, series: Optional[ObservationSeries] = None
) -> Iterator[DiagnosticsRecord]:
    """Run the plan, yielding a DiagnosticsRecord per recorded step.

    Raises DegenerateWeightsError (with the failing step attached) if the
    filter collapses; records already yielded remain valid.
    """
    plan.validate(series)
    series = _series_for(plan, series)
    want = set(plan.outputs)
    want_ks = "ks" in want
    cum_sq = np.cumsum(series.increments**2) if want_ks else None

    for t, result in enumerate(engine.run(series, plan.filter), start=1):
        if t % plan.record_every != 0:
            continue
        rec = DiagnosticsRecord(t=t)
        if "posterior" in want:
            rec.posterior_mean = result.posterior_mean
            rec.posterior_variance = result.posterior_variance
        if want_ks and t >= 2:
            bp = BenchmarkPosterior(sigma_hat_sq=float(cum_sq[t - 1]) / t, n=t)
            ens = result.ensemble
            rec.ks = ks_statistic(WeightedSample(ens.sigmas, ens.weights), bp)
        if "zero_weight" in want:
            rec.zero_weight_prop = zero_weight_proportion(result.ensemble)
        if "edge_mass" in want:
            rec.edge_mass_lo, rec.edge_mass_hi = edge_mass(
                result.pre_update, result.post_update, plan.edge_mass_p
            )
        if "dispersion" in want:
            rec.dispersion = (
                result.dispersion_reselected
                if result.dispersion_reselected is not None
                else realized_dispersion_total(result.ensemble)
            )
        if "avg_phi" in want:
            rec.avg_phi = average_phi(result.ensemble)
        yield rec


def run_experiment(
    plan: ExperimentPlan, series: Optional[ObservationSeries] = None
) -> ExperimentResult:
    """Run a plan to completion, capturing an abort instead of raising."""
    out = ExperimentResult()
    try:
        for rec in iter_records(plan, series):
            out.records.append(rec)
    except DegenerateWeightsError as err:
        out.aborted_at = err.step_index
        out.abort_reason = "degenerate_weights"
    return out


def ks_convergence(
    series: ObservationSeries, config: FilterConfig, n_grid: Sequence[int]
) -> list[tuple[int, float]]:
    """Final-step KS against the benchmark for each particle count.

    Reruns the configured filter on the same (Gaussian) series once per
    entry of the strictly increasing particle-count grid.
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    if series.truth is not None and not series.has_constant_truth():
        raise ValueError("ks convergence requires Gaussian data (series truth is not constant)")
    if series.n_steps < 2:
        raise ValueError("series too short for a benchmark posterior")
    bp = benchmark_from_series(series, series.n_steps)
    rows = []
    for n in n_grid:
        cfg = config.with_(n_particles=n)
        last = None
        for last in engine.run(series, cfg):
            pass
        ens = last.ensemble
        rows.append((n, ks_statistic(WeightedSample(ens.sigmas, ens.weights), bp)))
    return rows


def format_value(v: Optional[float]) -> str:
    """CSV cell: full double precision, empty for not-recorded."""
    if v is None:
        return ""
    return "%.17g" % v


def records_to_rows(records) -> Iterator[list[str]]:
    for rec in records:
        yield [
            str(rec.t),
            format_value(rec.posterior_mean),
            format_value(rec.posterior_variance),
            format_value(rec.ks),
            format_value(rec.zero_weight_prop),
            format_value(rec.edge_mass_lo),
            format_value(rec.edge_mass_hi),
            format_value(rec.dispersion),
            format_value(rec.avg_phi),
        ]


def write_records_csv(
    path, records, abort: Optional[tuple[int, str]] = None
) -> None:
    """Write diagnostics rows; append an #ABORTED trailer when given."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(RUN_CSV_HEADER)
        for row in records_to_rows(records):
            w.writerow(row)
        if abort is not None:
            f.write(f"#ABORTED t={abort[0]} reason={abort[1]}\n")


def _sweep_task(args: tuple[str, ExperimentPlan, str]) -> str:
    key, plan, out_dir = args
    result = run_experiment(plan)
    path = Path(out_dir) / f"{key}.csv"
    abort = (result.aborted_at, result.abort_reason) if result.aborted_at is not None else None
    write_records_csv(path, result.records, abort=abort)
    return str(path)


def default_workers() -> int:
    env = os.environ.get("ADAPTIVE_PF_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"ADAPTIVE_PF_WORKERS must be an integer, got {env!r}")
    return 1


def run_sweep(
    plans: dict[str, ExperimentPlan], out_dir, workers: Optional[int] = None
) -> list[str]:
    """Run keyed plans, one CSV per key; parallel runs match serial output.

    Each run owns its seed-derived streams and its own output file, so the
    worker count never changes the written bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = default_workers() if workers is None else max(1, int(workers))
    tasks = [(key, plan, str(out_dir)) for key, plan in plans.items()]
    for key, plan, _ in tasks:
        plan.validate()
    if workers == 1 or len(tasks) <= 1:
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_task, tasks))
