"""Config validation, exit codes, and byte-deterministic reports."""

import json
import os

import pytest

from cellgamma.cli import main, run_config, validate_config
from cellgamma.errors import ConfigInvalid, EmptyReport
from cellgamma.report import (config_hash, emit_report, flatten_row,
                              format_float)

CELL_CONFIG = {
    "subcommand": "cell",
    "model": {"name": "double_well"},
    "jump": {"phi_plus": [1.0], "phi_minus": [-1.0], "nu": [1.0]},
    "grid": {"n_normal": 48},
    "optimizer": {"n_random": 1},
    "seed": 3,
}


def _write(tmp_path, config, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(config))
    return str(p)


def _read_outputs(out):
    names = ("report.json", "report.csv")
    return {n: (out / n).read_bytes() for n in names}


def test_cell_run_deterministic_bytes(tmp_path):
    cfg = _write(tmp_path, CELL_CONFIG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["cell", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["cell", "--config", cfg, "--out", str(out2)]) == 0
    assert _read_outputs(out1) == _read_outputs(out2)
    doc = json.loads((out1 / "report.json").read_text())
    assert doc["rows"][0]["subcommand"] == "cell"
    # timing sidecar exists but stays out of the deterministic set
    assert (out1 / "timing.json").exists()
    assert "wall" not in (out1 / "report.json").read_text()


def test_malformed_config_exit_2_no_outputs(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    out = tmp_path / "out"
    assert main(["cell", "--config", str(p), "--out", str(out)]) == 2
    assert not out.exists()


def test_unknown_keys_rejected(tmp_path):
    cfg = dict(CELL_CONFIG)
    cfg["bogus_knob"] = 1
    out = tmp_path / "out"
    assert main(["cell", "--config", _write(tmp_path, cfg),
                 "--out", str(out)]) == 2
    assert not out.exists()
    with pytest.raises(ConfigInvalid):
        validate_config(cfg)


def test_missing_required_jump_fields():
    cfg = {"subcommand": "cell", "model": {"name": "double_well"}}
    with pytest.raises(ConfigInvalid):
        validate_config(cfg)


def test_subcommand_mismatch_exit_2(tmp_path):
    cfg = _write(tmp_path, CELL_CONFIG)
    assert main(["shock", "--config", cfg, "--out",
                 str(tmp_path / "o")]) == 2


def test_config_hash_stable_and_sensitive():
    h1 = config_hash(CELL_CONFIG)
    h2 = config_hash(json.loads(json.dumps(CELL_CONFIG)))
    assert h1 == h2
    changed = dict(CELL_CONFIG)
    changed["seed"] = 4
    assert config_hash(changed) != h1


def test_emit_report_empty_raises(tmp_path):
    with pytest.raises(EmptyReport):
        emit_report([], str(tmp_path))


def test_report_roundtrip_reemission_identical(tmp_path):
    rows = [{"a": 1.0 / 3.0, "nested": {"b": 2}, "seq": [0.1, 0.2]},
            {"a": 7.0, "extra": "x,y"}]
    p1 = tmp_path / "r1"
    p2 = tmp_path / "r2"
    emit_report(rows, str(p1))
    doc = json.loads((p1 / "report.json").read_text())
    emit_report(doc["rows"], str(p2))
    assert (p1 / "report.json").read_bytes() == (p2 / "report.json").read_bytes()
    assert (p1 / "report.csv").read_bytes() == (p2 / "report.csv").read_bytes()


def test_flatten_and_float_format():
    flat = flatten_row({"x": {"y": [1.5, {"z": 2.0}]}})
    assert flat["x.y.0"] == format_float(1.5)
    assert flat["x.y.1.z"] == format_float(2.0)
    assert float(format_float(1.0 / 3.0)) == 1.0 / 3.0


def test_catalog_without_config(tmp_path):
    out = tmp_path / "cat"
    assert main(["catalog", "--out", str(out)]) == 0
    doc = json.loads((out / "report.json").read_text())
    names = {r["model"] for r in doc["rows"]}
    assert {"double_well", "micromagnetics_2d", "burgers"} <= names


def test_duality_small_run(tmp_path):
    cfg = {"subcommand": "duality",
           "duality": {"n_fluxes": 3, "resolution": 12}, "seed": 1}
    out = tmp_path / "dual"
    run_config(cfg, str(out))
    doc = json.loads((out / "report.json").read_text())
    assert len(doc["rows"]) == 3
    assert all(r["gap_ok"] and r["ordering_ok"] for r in doc["rows"])


def test_gamma_run_writes_sweep_csv(tmp_path):
    cfg = {"subcommand": "gamma",
           "model": {"name": "double_well", "params": {"space_dim": 2}},
           "jump": {"phi_plus": [1.0], "phi_minus": [-1.0], "nu": [1.0, 0.0]},
           "gamma": {"epsilons": [0.125, 0.0625], "resolution": 64},
           "optimizer": {"n_random": 0}}
    out = tmp_path / "g"
    run_config(cfg, str(out))
    assert (out / "gamma_sweep.csv").exists()
    lines = (out / "gamma_sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "epsilon,full_energy,predicted,ratio"
    assert len(lines) == 3


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("CELLGAMMA_THREADS", "2")
    cfg = _write(tmp_path, CELL_CONFIG)
    out = tmp_path / "thr"
    assert main(["cell", "--config", cfg, "--out", str(out)]) == 0
    monkeypatch.setenv("CELLGAMMA_THREADS", "zero")
    assert main(["cell", "--config", cfg, "--out", str(tmp_path / "bad")]) == 2


def test_flag_seed_overrides_config(tmp_path):
    cfg = _write(tmp_path, CELL_CONFIG)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["cell", "--config", cfg, "--seed", "9",
                 "--out", str(out1)]) == 0
    assert main(["cell", "--config", cfg, "--out", str(out2)]) == 0
    d1 = json.loads((out1 / "report.json").read_text())["rows"][0]
    d2 = json.loads((out2 / "report.json").read_text())["rows"][0]
    assert d1["seed"] == 9 and d2["seed"] == 3
    assert d1["config_hash"] != d2["config_hash"]


def test_oracle_subcommand(tmp_path):
    cfg = {"subcommand": "oracle", "model": {"name": "double_well"},
           "jump": {"phi_plus": [1.0], "phi_minus": [-1.0], "nu": [1.0]},
           "oracle": {"sampling": 128}}
    out = tmp_path / "o"
    run_config(cfg, str(out))
    doc = json.loads((out / "report.json").read_text())
    e = float(doc["rows"][0]["geodesic_energy"])
    assert abs(e - 8.0 / 3.0) <= 0.01 * (8.0 / 3.0)
