"""Command-line front end.

Subcommands: `generate` (simulate a series to CSV), `run` (one filter run
to a diagnostics CSV), `ks-convergence` (final KS per particle count),
`preset` (pinned, byte-reproducible experiment families), and `sweep`
(parallel fan-out over a parameter grid and seeds).

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 aborted run
(degenerate weights). Option precedence: command line over config file
over built-in defaults; config files are flat `key = value` text.
"""

from __future__ import annotations

import sys

import click

from .engine import INIT_SCHEMES, RESAMPLE_POLICIES, VARIANTS, DegenerateWeightsError, FilterConfig
from .harness import (
    RUN_CSV_HEADER,
    ExperimentPlan,
    default_workers,
    iter_records,
    ks_convergence,
    records_to_rows,
    run_sweep,
)
from .models import (
    GaussianModel,
    RegimeShiftModel,
    StochVolModel,
    generate,
    read_series_csv,
    write_series_csv,
)
from .presets import preset_names, run_preset
from .rng import RngStream

MODEL_NAMES = ("gaussian", "regime-shift", "stoch-vol")


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


_FILTER_KEYS = {
    "variant": str,
    "n_particles": int,
    "prior_lo": float,
    "prior_hi": float,
    "init": str,
    "h": float,
    "phi_fixed": float,
    "phi_init_hi": float,
    "gamma": float,
    "kappa": float,
    "sigma_floor": float,
    "log_weights": _parse_bool,
    "resample": str,
    "seed": int,
}

_FILTER_DEFAULTS = {
    "variant": "lw",
    "n_particles": 1000,
    "prior_lo": 0.001,
    "prior_hi": 1.0,
    "init": "equal_spaced",
    "h": 0.1,
    "phi_fixed": 0.0,
    "phi_init_hi": 0.0,
    "gamma": 0.0,
    "kappa": 0.0,
    "sigma_floor": 1e-6,
    "log_weights": False,
    "resample": None,
    "seed": 0,
}


def load_config(path) -> dict[str, str]:
    """Flat `key = value` config file; '#' lines are comments."""
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _merge(cli_value, file_cfg: dict, key: str, default, cast):
    if cli_value is not None and cli_value is not False:
        return cli_value
    if key in file_cfg:
        return cast(file_cfg[key])
    return default


def _filter_from(opts: dict, file_cfg: dict) -> FilterConfig:
    merged = {}
    for key, cast in _FILTER_KEYS.items():
        merged[key] = _merge(opts.get(key), file_cfg, key, _FILTER_DEFAULTS[key], cast)
    return FilterConfig(
        variant=merged["variant"],
        n_particles=merged["n_particles"],
        prior_lo=merged["prior_lo"],
        prior_hi=merged["prior_hi"],
        init=merged["init"],
        h=merged["h"],
        phi_fixed=merged["phi_fixed"],
        phi_init_hi=merged["phi_init_hi"],
        gamma=merged["gamma"],
        kappa=merged["kappa"],
        sigma_floor=merged["sigma_floor"],
        log_domain_weights=merged["log_weights"],
        resample_policy=merged["resample"],
        seed=merged["seed"],
    )


def _model_from(opts: dict, file_cfg: dict):
    name = _merge(opts.get("model"), file_cfg, "model", None, str)
    if name is None:
        return None
    sigma = _merge(opts.get("sigma"), file_cfg, "sigma", 0.2, float)
    sigma1 = _merge(opts.get("sigma1"), file_cfg, "sigma1", 0.1, float)
    sigma2 = _merge(opts.get("sigma2"), file_cfg, "sigma2", 0.3, float)
    t_star = _merge(opts.get("t_star"), file_cfg, "t_star", 10_000, int)
    alpha0 = _merge(opts.get("alpha0"), file_cfg, "alpha0", 0.2, float)
    nu = _merge(opts.get("nu"), file_cfg, "nu", 0.2, float)
    if name == "gaussian":
        return GaussianModel(sigma=sigma)
    if name == "regime-shift":
        return RegimeShiftModel(sigma1=sigma1, sigma2=sigma2, t_star=t_star)
    if name == "stoch-vol":
        return StochVolModel(alpha0=alpha0, nu=nu)
    raise ValueError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


def _filter_options(f):
    opts = [
        click.option("--variant", type=click.Choice(VARIANTS), default=None, help="Filter variant."),
        click.option("--n-particles", type=int, default=None, help="Ensemble size N."),
        click.option("--prior-lo", type=float, default=None, help="Lower edge of the volatility prior."),
        click.option("--prior-hi", type=float, default=None, help="Upper edge of the volatility prior."),
        click.option("--init", type=click.Choice(INIT_SCHEMES), default=None, help="Initial particle placement."),
        click.option("--h", type=float, default=None, help="Kernel shrinkage bandwidth."),
        click.option("--phi-fixed", type=float, default=None, help="Shared additive kernel noise (lw_fixed_noise)."),
        click.option("--phi-init-hi", type=float, default=None, help="Upper bound of the initial per-particle noise."),
        click.option("--gamma", type=float, default=None, help="Noise perturbation variance (lw_accel)."),
        click.option("--kappa", type=float, default=None, help="Noise damping drift (lw_accel)."),
        click.option("--sigma-floor", type=float, default=None, help="Lower clamp for kernel draws."),
        click.option("--log-weights", "log_weights", is_flag=True, default=False, help="Accumulate weights in the log domain."),
        click.option("--resample", type=click.Choice(RESAMPLE_POLICIES), default=None, help="Resampling policy (default: variant-specific)."),
        click.option("--seed", type=int, default=None, help="Filter RNG seed."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _model_options(f):
    opts = [
        click.option("--model", type=click.Choice(MODEL_NAMES), default=None, help="Generating process."),
        click.option("--sigma", type=float, default=None, help="Gaussian per-step volatility."),
        click.option("--sigma1", type=float, default=None, help="Regime-shift volatility before t_star."),
        click.option("--sigma2", type=float, default=None, help="Regime-shift volatility from t_star on."),
        click.option("--t-star", type=int, default=None, help="Regime change step."),
        click.option("--alpha0", type=float, default=None, help="Initial stochastic volatility."),
        click.option("--nu", type=float, default=None, help="Volatility of volatility."),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


@click.group()
def cli():
    """Particle filters with accelerated adaptation: data, runs, sweeps."""


@cli.command("generate")
@_model_options
@click.option("--steps", type=int, default=None, help="Number of increments T.")
@click.option("--seed", type=int, default=None, help="Data RNG seed.")
@click.option("--out", type=click.Path(), required=True, help="Output series CSV.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def cmd_generate(out, config_path, steps, seed, **model_opts):
    """Simulate an observation series and write it as `t,x,dx,truth` CSV."""
    file_cfg = load_config(config_path) if config_path else {}
    if model_opts.get("model") is None and "model" not in file_cfg:
        model_opts["model"] = "gaussian"
    spec = _model_from(model_opts, file_cfg)
    steps = _merge(steps, file_cfg, "steps", 1000, int)
    seed = _merge(seed, file_cfg, "seed", 0, int)
    series = generate(spec, steps, RngStream(seed))
    write_series_csv(series, out)
    click.echo(f"# generate: model={spec} steps={steps} seed={seed} out={out}")
    return 0


@cli.command("run")
@click.option("--in", "in_path", type=click.Path(exists=True), default=None, help="Input series CSV (else simulate inline).")
@_model_options
@click.option("--steps", type=int, default=None, help="Increments to simulate for an inline model.")
@click.option("--data-seed", type=int, default=None, help="Data RNG seed for an inline model.")
@_filter_options
@click.option("--record-every", type=int, default=None, help="Record stride.")
@click.option("--outputs", type=str, default=None, help="Comma list: posterior,ks,zero_weight,edge_mass,dispersion,avg_phi.")
@click.option("--edge-mass-p", type=float, default=None, help="Tail level for the edge-mass diagnostic.")
@click.option("--out", type=click.Path(), required=True, help="Output diagnostics CSV.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def cmd_run(in_path, out, config_path, record_every, outputs, edge_mass_p, steps, data_seed, **opts):
    """Run one filter over a series, streaming diagnostics rows to CSV."""
    file_cfg = load_config(config_path) if config_path else {}
    filter_config = _filter_from(opts, file_cfg)
    series = None
    model = None
    if in_path is not None:
        series = read_series_csv(in_path)
    else:
        model = _model_from(opts, file_cfg)
        if model is None:
            raise ValueError("either --in or --model is required")
    plan = ExperimentPlan(
        filter=filter_config,
        model=model,
        n_steps=_merge(steps, file_cfg, "steps", 1000, int) if model is not None else None,
        data_seed=_merge(data_seed, file_cfg, "data_seed", 0, int),
        record_every=_merge(record_every, file_cfg, "record_every", 1, int),
        outputs=tuple(
            s.strip()
            for s in _merge(outputs, file_cfg, "outputs", "posterior", str).split(",")
            if s.strip()
        ),
        edge_mass_p=_merge(edge_mass_p, file_cfg, "edge_mass_p", 0.05, float),
    )
    plan.validate(series)
    click.echo(f"# run: model={model or in_path} filter={filter_config} outputs={plan.outputs}")
    code = 0
    with open(out, "w", newline="") as f:
        f.write(",".join(RUN_CSV_HEADER) + "\n")
        try:
            for row in records_to_rows(iter_records(plan, series)):
                f.write(",".join(row) + "\n")
        except DegenerateWeightsError as err:
            f.write(f"#ABORTED t={err.step_index} reason=degenerate_weights\n")
            click.echo(f"aborted at step {err.step_index}: degenerate weights", err=True)
            code = 3
    return code


@cli.command("ks-convergence")
@click.option("--series", "series_path", type=click.Path(exists=True), required=True, help="Gaussian series CSV.")
@click.option("--n-grid", type=str, default=None, help="Comma list of particle counts, strictly increasing.")
@_filter_options
@click.option("--out", type=click.Path(), required=True, help="Output CSV `N,ks`.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def cmd_ks_convergence(series_path, n_grid, out, config_path, **opts):
    """Rerun the filter per particle count on one series; report final KS."""
    file_cfg = load_config(config_path) if config_path else {}
    filter_config = _filter_from(opts, file_cfg)
    grid_text = _merge(n_grid, file_cfg, "n_grid", "100,316,1000,3162,10000", str)
    grid = [int(s) for s in grid_text.split(",") if s.strip()]
    series = read_series_csv(series_path)
    rows = ks_convergence(series, filter_config, grid)
    with open(out, "w", newline="") as f:
        f.write("N,ks\n")
        for n, ks in rows:
            f.write(f"{n},{'%.17g' % ks}\n")
    return 0


@cli.command("preset")
@click.argument("name", required=True)
@click.option("--out-dir", type=click.Path(), default=".", help="Directory for the preset CSVs.")
def cmd_preset(name, out_dir):
    """Run a pinned named experiment; output is byte-identical on rerun."""
    try:
        paths = run_preset(name, out_dir, echo=click.echo)
    except KeyError:
        click.echo(f"unknown preset {name!r}; available presets:", err=True)
        for p in preset_names():
            click.echo(f"  {p}", err=True)
        return 1
    for p in paths:
        click.echo(str(p))
    return 0


@cli.command("sweep")
@_model_options
@click.option("--steps", type=int, default=None)
@click.option("--data-seed", type=int, default=None)
@_filter_options
@click.option("--record-every", type=int, default=None)
@click.option("--outputs", type=str, default=None)
@click.option("--edge-mass-p", type=float, default=None)
@click.option("--sweep-param", type=str, default=None, help="Grid as NAME=V1,V2,... over a filter field.")
@click.option("--seeds", type=str, default=None, help="Comma list of filter seeds.")
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--workers", type=int, default=None, envvar="ADAPTIVE_PF_WORKERS", help="Parallel workers (env ADAPTIVE_PF_WORKERS).")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def cmd_sweep(out_dir, workers, sweep_param, seeds, config_path, record_every, outputs, edge_mass_p, steps, data_seed, **opts):
    """Fan a run out over a parameter grid and seeds, one CSV per run."""
    file_cfg = load_config(config_path) if config_path else {}
    base = _filter_from(opts, file_cfg)
    model = _model_from(opts, file_cfg)
    if model is None:
        raise ValueError("sweep requires --model")
    seed_list = [int(s) for s in _merge(seeds, file_cfg, "seeds", str(base.seed), str).split(",")]
    grid: list[tuple[str, float | int | None]] = [(None, None)]
    sweep_param = _merge(sweep_param, file_cfg, "sweep_param", None, str)
    if sweep_param is not None:
        pname, _, values = sweep_param.partition("=")
        pname = pname.strip()
        if pname not in _FILTER_KEYS or pname in ("variant", "init", "resample", "log_weights", "seed"):
            raise ValueError(f"cannot sweep over {pname!r}")
        cast = _FILTER_KEYS[pname]
        grid = [(pname, cast(v.strip())) for v in values.split(",") if v.strip()]
    plan_kwargs = dict(
        model=model,
        n_steps=_merge(steps, file_cfg, "steps", 1000, int),
        data_seed=_merge(data_seed, file_cfg, "data_seed", 0, int),
        record_every=_merge(record_every, file_cfg, "record_every", 1, int),
        outputs=tuple(
            s.strip()
            for s in _merge(outputs, file_cfg, "outputs", "posterior", str).split(",")
            if s.strip()
        ),
        edge_mass_p=_merge(edge_mass_p, file_cfg, "edge_mass_p", 0.05, float),
    )
    plans = {}
    for pname, value in grid:
        for seed in seed_list:
            cfg = base.with_(seed=seed)
            key = f"seed-{seed}"
            if pname is not None:
                cfg = cfg.with_(**{pname: value})
                key = f"{pname}-{value}_{key}"
            plans[key] = ExperimentPlan(filter=cfg, **plan_kwargs)
    paths = run_sweep(plans, out_dir, workers=workers)
    for p in paths:
        click.echo(p)
    return 0


def main(argv=None) -> int:
    """Entry point with the documented exit-code policy."""
    try:
        code = cli.main(args=argv, standalone_mode=False)
        return int(code) if isinstance(code, int) else 0
    except click.UsageError as err:
        click.echo(f"error: {err.format_message()}", err=True)
        return 1
    except click.ClickException as err:
        err.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except (ValueError, KeyError) as err:
        click.echo(f"error: {err}", err=True)
        return 1
    except DegenerateWeightsError as err:
        click.echo(f"error: degenerate weights at step {err.step_index}", err=True)
        return 3
    except OSError as err:
        click.echo(f"i/o error: {err}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
