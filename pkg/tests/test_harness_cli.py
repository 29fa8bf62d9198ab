import csv
import os

import numpy as np
import pytest

from adaptivepf.cli import main
from adaptivepf.engine import FilterConfig
from adaptivepf.harness import (
    RUN_CSV_HEADER,
    ExperimentPlan,
    default_workers,
    ks_convergence,
    run_experiment,
    run_sweep,
)
from adaptivepf.models import (
    GaussianModel,
    ObservationSeries,
    RegimeShiftModel,
    generate,
    write_series_csv,
)
from adaptivepf.rng import RngStream


# ---------------------------------------------------------------- plans


def test_plan_validation():
    good = ExperimentPlan(filter=FilterConfig(), model=GaussianModel(0.2), n_steps=10)
    good.validate()
    with pytest.raises(ValueError):
        ExperimentPlan(filter=FilterConfig(), model=GaussianModel(0.2), n_steps=10, record_every=0).validate()
    with pytest.raises(ValueError):
        ExperimentPlan(filter=FilterConfig(), model=GaussianModel(0.2), n_steps=10, outputs=("nope",)).validate()
    with pytest.raises(ValueError):
        ExperimentPlan(
            filter=FilterConfig(),
            model=RegimeShiftModel(0.1, 0.3, 5),
            n_steps=10,
            outputs=("ks",),
        ).validate()
    with pytest.raises(ValueError):
        ExperimentPlan(
            filter=FilterConfig(variant="sis", log_domain_weights=True),
            model=GaussianModel(0.2),
            n_steps=10,
            outputs=("zero_weight",),
        ).validate()
    with pytest.raises(ValueError):
        ExperimentPlan(
            filter=FilterConfig(variant="lw"),
            model=GaussianModel(0.2),
            n_steps=10,
            outputs=("avg_phi",),
        ).validate()
    with pytest.raises(ValueError):
        ExperimentPlan(filter=FilterConfig()).validate()


def test_record_stride():
    plan = ExperimentPlan(
        filter=FilterConfig(n_particles=50), model=GaussianModel(0.2), n_steps=100,
        record_every=10,
    )
    result = run_experiment(plan)
    assert [r.t for r in result.records] == list(range(10, 101, 10))


def test_ks_needs_two_observations_before_first_value():
    plan = ExperimentPlan(
        filter=FilterConfig(n_particles=50), model=GaussianModel(0.2), n_steps=5,
        outputs=("posterior", "ks"),
    )
    recs = run_experiment(plan).records
    assert recs[0].ks is None
    assert all(r.ks is not None for r in recs[1:])


def test_ks_convergence_grid_validation():
    series = generate(GaussianModel(0.2), 100, RngStream(1))
    with pytest.raises(ValueError):
        ks_convergence(series, FilterConfig(variant="sis"), [100, 100])
    regime = generate(RegimeShiftModel(0.1, 0.3, 10), 100, RngStream(1))
    with pytest.raises(ValueError):
        ks_convergence(regime, FilterConfig(variant="sis"), [10, 20])


def test_ks_convergence_single_point():
    series = generate(GaussianModel(0.2), 200, RngStream(2))
    rows = ks_convergence(series, FilterConfig(variant="sis"), [10])
    assert len(rows) == 1
    assert rows[0][0] == 10
    assert 0.0 <= rows[0][1] <= 1.0


def test_sweep_parallel_matches_serial(tmp_path):
    plans = {
        f"gamma-{g}_seed-{s}": ExperimentPlan(
            filter=FilterConfig(variant="lw_accel", n_particles=60, seed=s, phi_init_hi=1e-3, gamma=g),
            model=GaussianModel(0.2), n_steps=200, data_seed=3,
            record_every=20, outputs=("posterior", "avg_phi"),
        )
        for g in (0.001, 0.01)
        for s in (1, 2)
    }
    serial_dir = tmp_path / "serial"
    parallel_dir = tmp_path / "parallel"
    run_sweep(plans, serial_dir, workers=1)
    run_sweep(plans, parallel_dir, workers=3)
    for key in plans:
        a = (serial_dir / f"{key}.csv").read_bytes()
        b = (parallel_dir / f"{key}.csv").read_bytes()
        assert a == b


def test_default_workers_env(monkeypatch):
    monkeypatch.delenv("ADAPTIVE_PF_WORKERS", raising=False)
    assert default_workers() == 1
    monkeypatch.setenv("ADAPTIVE_PF_WORKERS", "4")
    assert default_workers() == 4
    monkeypatch.setenv("ADAPTIVE_PF_WORKERS", "junk")
    with pytest.raises(ValueError):
        default_workers()


# ---------------------------------------------------------------- CLI


def test_generate_row_count_and_determinism(tmp_path):
    out = tmp_path / "g.csv"
    code = main(["generate", "--model", "gaussian", "--sigma", "0.2", "--steps", "1000",
                 "--seed", "7", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1002  # header + rows for t = 0..1000
    first = out.read_bytes()
    assert main(["generate", "--model", "gaussian", "--sigma", "0.2", "--steps", "1000",
                 "--seed", "7", "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_generate_rejects_bad_sigma(tmp_path):
    code = main(["generate", "--model", "gaussian", "--sigma", "-1", "--steps", "10",
                 "--out", str(tmp_path / "g.csv")])
    assert code == 1


def test_generate_io_error_exit_code(tmp_path):
    code = main(["generate", "--model", "gaussian", "--steps", "10",
                 "--out", str(tmp_path / "missing-dir" / "g.csv")])
    assert code == 2


def test_bad_usage_exit_code():
    assert main(["run", "--no-such-flag"]) == 1
    assert main(["nonsense-command"]) == 1


def test_run_csv_shape(tmp_path):
    series_path = tmp_path / "g.csv"
    main(["generate", "--model", "gaussian", "--sigma", "0.2", "--steps", "100",
          "--seed", "7", "--out", str(series_path)])
    out = tmp_path / "r.csv"
    code = main(["run", "--in", str(series_path), "--variant", "lw", "--n-particles", "80",
                 "--seed", "5", "--outputs", "posterior,ks", "--record-every", "10",
                 "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == RUN_CSV_HEADER
    assert len(rows) == 11
    body = rows[1:]
    assert all(r[1] != "" and r[2] != "" for r in body)  # posterior columns
    assert all(r[4] == "" and r[8] == "" for r in body)  # zero_weight, avg_phi empty
    # full double precision round-trips
    assert float(body[0][1]) == float(body[0][1])


def test_run_inline_model(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["run", "--model", "regime-shift", "--sigma1", "0.1", "--sigma2", "0.3",
                 "--t-star", "50", "--steps", "100", "--data-seed", "3",
                 "--variant", "lw_accel", "--phi-init-hi", "0.002", "--gamma", "0.01",
                 "--n-particles", "60", "--seed", "4",
                 "--outputs", "posterior,avg_phi,edge_mass,dispersion", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 101
    assert all(r[5] != "" and r[6] != "" and r[7] != "" and r[8] != "" for r in rows[1:])


def test_run_degenerate_abort_writes_trailer(tmp_path):
    dx = np.array([0.01, -0.02, 1e6, 0.01])
    series = ObservationSeries(values=np.concatenate([[0.0], np.cumsum(dx)]), increments=dx)
    series_path = tmp_path / "bad.csv"
    write_series_csv(series, series_path)
    out = tmp_path / "r.csv"
    code = main(["run", "--in", str(series_path), "--variant", "sis", "--n-particles", "50",
                 "--out", str(out)])
    assert code == 3
    lines = out.read_text().splitlines()
    assert lines[-1] == "#ABORTED t=3 reason=degenerate_weights"
    assert len(lines) == 4  # header + 2 recorded steps + trailer


def test_run_log_weights_flag(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["run", "--model", "gaussian", "--steps", "50", "--variant", "sis",
                 "--n-particles", "40", "--log-weights", "--out", str(out)])
    assert code == 0
    # zero-weight counting is a linear-domain measurement
    code = main(["run", "--model", "gaussian", "--steps", "50", "--variant", "sis",
                 "--n-particles", "40", "--log-weights", "--outputs", "posterior,zero_weight",
                 "--out", str(out)])
    assert code == 1


def test_run_rejects_ks_for_non_gaussian_series(tmp_path):
    series_path = tmp_path / "regime.csv"
    main(["generate", "--model", "regime-shift", "--t-star", "20", "--steps", "50",
          "--out", str(series_path)])
    code = main(["run", "--in", str(series_path), "--outputs", "posterior,ks",
                 "--out", str(tmp_path / "r.csv")])
    assert code == 1


def test_ks_convergence_cli(tmp_path):
    series_path = tmp_path / "g.csv"
    main(["generate", "--model", "gaussian", "--steps", "300", "--seed", "9",
          "--out", str(series_path)])
    out = tmp_path / "ks.csv"
    code = main(["ks-convergence", "--series", str(series_path), "--variant", "sis",
                 "--n-grid", "10,30,100", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["N", "ks"]
    assert [r[0] for r in rows[1:]] == ["10", "30", "100"]


def test_ks_convergence_cli_rejects_non_gaussian(tmp_path):
    series_path = tmp_path / "regime.csv"
    main(["generate", "--model", "regime-shift", "--t-star", "20", "--steps", "50",
          "--out", str(series_path)])
    code = main(["ks-convergence", "--series", str(series_path), "--variant", "sis",
                 "--n-grid", "10,20", "--out", str(tmp_path / "ks.csv")])
    assert code == 1


def test_preset_unknown_lists_names():
    assert main(["preset", "nonsense"]) == 1


def test_preset_cli_writes_csv(tmp_path):
    code = main(["preset", "fig-ks-convergence-equal", "--out-dir", str(tmp_path)])
    assert code == 0
    out = tmp_path / "fig-ks-convergence-equal.csv"
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["N", "ks"]
    assert len(rows) == 6


def test_sweep_cli(tmp_path):
    out_dir = tmp_path / "sweep"
    code = main(["sweep", "--model", "gaussian", "--steps", "100", "--data-seed", "2",
                 "--variant", "lw_accel", "--phi-init-hi", "0.002", "--n-particles", "50",
                 "--sweep-param", "gamma=0.001,0.01", "--seeds", "1,2",
                 "--record-every", "10", "--outputs", "posterior,avg_phi",
                 "--out-dir", str(out_dir), "--workers", "2"])
    assert code == 0
    names = sorted(p.name for p in out_dir.glob("*.csv"))
    assert names == [
        "gamma-0.001_seed-1.csv",
        "gamma-0.001_seed-2.csv",
        "gamma-0.01_seed-1.csv",
        "gamma-0.01_seed-2.csv",
    ]


def test_sweep_rejects_unknown_param(tmp_path):
    code = main(["sweep", "--model", "gaussian", "--steps", "10",
                 "--sweep-param", "variant=lw,sir", "--out-dir", str(tmp_path)])
    assert code == 1


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\nsteps = 55\nmodel = gaussian\nn_particles = 40\n")
    out = tmp_path / "a.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 56  # config steps apply
    out2 = tmp_path / "b.csv"
    assert main(["run", "--config", str(cfg), "--steps", "66", "--out", str(out2)]) == 0
    assert len(out2.read_text().splitlines()) == 67  # CLI overrides config


def test_config_file_bad_line(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("not a key value pair\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 1
