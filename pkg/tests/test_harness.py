import numpy as np
import pytest

from ferrogas.cli import main as cli_main
from ferrogas.harness import (ConfigError, ExperimentConfig, PHASE_COLUMNS,
                              csv_to_rows, emit, rows_to_csv, run_criteria,
                              run_percolation_experiment,
                              run_phase_experiment, run_validate)


def _tiny(tag="phase", **extra):
    values = {
        "experiment.tag": tag,
        "geometry.box_cells": "3",
        "mcmc.sweeps": "40",
        "mcmc.burn_in": "20",
        "mcmc.chains": "2",
        "mcmc.seed": "9",
        "grids.z": "3.0",
        "grids.q": "0.0,0.9",
    }
    values.update(extra)
    return ExperimentConfig(values)


def test_config_defaults_and_types():
    cfg = ExperimentConfig({})
    assert cfg["model.d"] == 2
    assert cfg["geometry.box_cells"] == [3, 5, 7]
    assert cfg["grids.boundary"] == ["plus", "minus", "free"]
    assert isinstance(cfg["model.z"], float)


def test_config_unknown_key_is_error():
    with pytest.raises(ConfigError):
        ExperimentConfig({"model.zz": "1.0"})
    with pytest.raises(ConfigError):
        ExperimentConfig({"mcmc.sweep": "100"})


def test_config_bad_values():
    with pytest.raises(ConfigError):
        ExperimentConfig({"experiment.tag": "explode"})
    with pytest.raises(ConfigError):
        ExperimentConfig({"grids.boundary": "plus,weird"})


def test_config_file_roundtrip(tmp_path):
    cfg = _tiny()
    path = tmp_path / "run.cfg"
    path.write_text(cfg.to_text())
    back = ExperimentConfig.from_file(path)
    assert back.values == cfg.values
    assert back.content_hash() == cfg.content_hash()


def test_config_file_parse_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("model.d 2\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)
    path.write_text("# comment only\n\nmodel.d = 3\n")
    cfg = ExperimentConfig.from_file(path)
    assert cfg["model.d"] == 3


def test_config_model_construction():
    cfg = ExperimentConfig({"model.phi_star": "2.5", "model.r": "0.2"})
    spec = cfg.model()
    assert spec.phi.phi_star == 2.5
    assert spec.r == 0.2
    assert cfg.model(z=7.0).z == 7.0


def test_csv_roundtrip_numeric_equality():
    rows = [
        {"z": 137.357, "box_cells": 3, "boundary": "plus", "chains": 4,
         "sweeps": 100, "M_mean": 12.25, "M_stderr": 0.125,
         "N_mean": 540.0625, "N_stderr": 1.5, "equilibrated": 1},
        {"z": 137.357, "box_cells": 5, "boundary": "minus", "chains": 4,
         "sweeps": 100, "M_mean": -12.25, "M_stderr": 0.125,
         "N_mean": 1500.5, "N_stderr": 2.0, "equilibrated": 0},
    ]
    text = rows_to_csv(rows, PHASE_COLUMNS)
    back = csv_to_rows(text)
    assert back == rows


def test_empty_grid_gives_header_only_csv():
    assert rows_to_csv([], PHASE_COLUMNS) == ",".join(PHASE_COLUMNS) + "\n"


def test_run_validate_and_criteria_reports():
    cfg = _tiny(tag="validate")
    rep = run_validate(cfg)
    assert rep.criteria["passed"]
    assert rep.meta["config_hash"] == cfg.content_hash()
    crit = run_criteria(_tiny(tag="criteria"))
    assert crit.criteria["passed"]
    assert crit.criteria["n_star"] == 1


def test_run_validate_flags_bad_model():
    cfg = _tiny(tag="validate", **{"model.r": "0.9"})
    rep = run_validate(cfg)
    assert not rep.criteria["passed"]


def test_phase_experiment_structure_and_emit(tmp_path):
    cfg = _tiny()
    report = run_phase_experiment(cfg)
    assert len(report.rows) == 3        # one box size, three boundaries
    for row in report.rows:
        assert set(row) == set(PHASE_COLUMNS)
        assert row["chains"] == 2
    assert "z=3.0,box=3" in report.meta["sign_symmetry"]

    paths = emit(report, tmp_path / "out")
    names = sorted(p.split("/")[-1] for p in paths)
    assert "phase.csv" in names and "report.json" in names
    assert "M_vs_z_plus.dat" in names
    back = csv_to_rows((tmp_path / "out" / "phase.csv").read_text())
    for got, want in zip(back, report.rows):
        for col in PHASE_COLUMNS:
            assert got[col] == want[col]


def test_emit_is_byte_deterministic(tmp_path):
    cfg = _tiny()
    report = run_phase_experiment(cfg)
    emit(report, tmp_path / "a")
    emit(report, tmp_path / "b")
    for name in ("phase.csv", "report.json", "M_vs_z_free.dat"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_phase_experiment_reruns_identically():
    cfg = _tiny()
    r1 = run_phase_experiment(cfg)
    r2 = run_phase_experiment(cfg)
    assert r1.as_dict() == r2.as_dict()


def test_percolation_experiment_structure():
    cfg = _tiny(tag="percolation", **{"mcmc.snap_every": "10",
                                      "grids.z": "2.0,30.0"})
    report = run_percolation_experiment(cfg)
    assert len(report.rows) == 4        # 2 z x 1 size x 2 q
    q0_rows = [r for r in report.rows if r["q"] == 0.0]
    assert all(r["perc_prob"] == 0.0 for r in q0_rows)
    assert "monotone_in_z" in report.meta


def test_cli_exit_codes(tmp_path):
    out = str(tmp_path / "out")
    assert cli_main(["criteria", "--out", out]) == 0
    assert (tmp_path / "out" / "report.json").exists()

    bad = tmp_path / "bad.cfg"
    bad.write_text("model.bogus = 1\n")
    assert cli_main(["validate", "--config", str(bad), "--out", out]) == 1

    invalid = tmp_path / "invalid.cfg"
    invalid.write_text("model.r = 0.9\n")   # violates r < R/4
    assert cli_main(["validate", "--config", str(invalid), "--out", out]) == 2


def test_cli_overrides(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(_tiny().to_text())
    out = str(tmp_path / "o2")
    code = cli_main(["phase", "--config", str(cfgfile), "--out", out,
                     "--seed", "4", "--chains", "2"])
    assert code == 0
    text = (tmp_path / "o2" / "report.json").read_text()
    assert '"seed": 4' in text
