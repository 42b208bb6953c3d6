"""Config parsing and the command line entry points."""

import csv
import filecmp
import json

import numpy as np
import pytest

import wecs_sim
from wecs_sim import ConfigError, load_config
from wecs_sim.cli import _config_hash, _label, main

BASE = """# smoke setup
wind.source = synth
wind.mean_mps = 6.0
wind.intensity = 0.15
wind.duration_s = 12.0
wind.dt_s = 0.1
sim.t_end_s = 10.0
sim.seed = 3
sim.mode = sensorless
"""


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_config_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, BASE))
    assert cfg.machine.R == 0.42
    assert cfg.machine.V_dc == 50.0
    assert cfg.aero.lambda_opt == 5.75
    assert cfg.mode == "sensorless"
    assert cfg.t_end == 10.0
    assert cfg.seed == 3
    assert len(cfg.matrix) == 7  # encoder plus six mismatch rows
    assert cfg.gains.k_p == pytest.approx(8.902038821499051, rel=1e-12)
    assert cfg.wind.duration == pytest.approx(12.0)


def test_matrix_tokens_resolve_against_machine(tmp_path):
    text = BASE + "sweep.matrix = encoder | sensorless:L:-0.8R | sensorless:0.0005:0.1\n"
    cfg = load_config(_write(tmp_path, text))
    scens = cfg.matrix_scenarios()
    assert len(scens) == 3
    assert scens[0].mode == "encoder"
    assert scens[1].delta_L == pytest.approx(1e-3)
    assert scens[1].delta_R == pytest.approx(-0.336)
    assert scens[2].delta_L == pytest.approx(5e-4)
    assert scens[2].delta_R == pytest.approx(0.1)
    # observer model follows the mismatch
    assert scens[1].observer.R_o == pytest.approx(0.42 - 0.336)
    assert scens[1].observer.L_o == pytest.approx(2e-3)


@pytest.mark.parametrize("line,fragment", [
    ("no_such.key = 1", "unknown key"),
    ("sim.t_end_s = ten", "t_end"),
    ("wind.mean_mps", "="),
    ("sim.mode = fancy", "mode"),
    ("sweep.matrix = sensorless:L", "matrix"),
    ("aep.v_mean_mps = 0.0", "v_mean"),
])
def test_config_errors_carry_location(tmp_path, line, fragment):
    path = _write(tmp_path, BASE + line + "\n")
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert str(path) in str(exc.value)


def test_duplicate_key_rejected(tmp_path):
    path = _write(tmp_path, BASE + "sim.seed = 4\n")
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert exc.value.line == BASE.count("\n") + 1


def test_wind_file_source_needs_a_path(tmp_path):
    text = BASE.replace("wind.source = synth", "wind.source = file")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text))


def test_seed_override_changes_hash_and_wind(tmp_path):
    path = _write(tmp_path, BASE)
    cfg = load_config(path)
    cfg9 = load_config(path, seed_override=9)
    assert cfg9.seed == 9
    assert not np.array_equal(cfg.wind.samples, cfg9.wind.samples)
    assert _config_hash(path, None) == _config_hash(path, None)
    assert _config_hash(path, None) != _config_hash(path, 9)


def test_scenario_labels(table_machine):
    assert _label("encoder", 0.0, 0.0, table_machine) == "encoder"
    assert _label("sensorless", 0.0, 0.0, table_machine) == "sensorless_dL0_dR0"
    assert _label("sensorless", 1e-3, -0.336, table_machine) == "sensorless_dLp1_dRm0_8"
    assert _label("sensorless", 5e-4, 0.42, table_machine) == "sensorless_dLp0_5_dRp1"


RUN_FILES = {"trace.csv", "summary.csv", "tsr.svg", "current_errors.svg",
             "speed_error.svg", "p_dc.svg", "energy.svg"}


def test_run_command_writes_bundle(tmp_path):
    path = _write(tmp_path, BASE)
    out1, out2 = tmp_path / "out1", tmp_path / "out2"
    assert main(["run", "--config", str(path), "--out", str(out1)]) == 0
    assert {f.name for f in out1.iterdir()} == RUN_FILES | {"manifest.json"}
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert set(manifest["files"]) == RUN_FILES
    assert manifest["tool_version"] == wecs_sim.__version__
    assert manifest["config_hash"] == _config_hash(path, None)
    rows = (out1 / "trace.csv").read_text().splitlines()
    assert len(rows) == 10002  # header + 10 s at 1 ms
    # a rerun reproduces every artifact byte for byte
    assert main(["run", "--config", str(path), "--out", str(out2)]) == 0
    for name in sorted(RUN_FILES):
        assert filecmp.cmp(out1 / name, out2 / name, shallow=False), name


def test_exit_codes(tmp_path):
    bad = _write(tmp_path, BASE + "no_such.key = 1\n", name="bad.cfg")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.cfg"),
                 "--out", str(tmp_path / "x")]) == 2
    blocker = tmp_path / "blocker.txt"
    blocker.write_text("x")
    good = _write(tmp_path, BASE)
    assert main(["run", "--config", str(good), "--out", str(blocker / "sub")]) == 4


def test_divergent_run_reports_and_keeps_partial_output(tmp_path):
    text = BASE.replace("sim.mode = sensorless", "sim.mode = encoder")
    text += "control.k_p = -50.0\ncontrol.k_i = 1.0\n"
    path = _write(tmp_path, text, name="div.cfg")
    out = tmp_path / "divout"
    assert main(["run", "--config", str(path), "--out", str(out)]) == 3
    assert {f.name for f in out.iterdir()} == RUN_FILES | {"manifest.json"}
    assert len((out / "trace.csv").read_text().splitlines()) < 100


def test_gains_report(tmp_path, capsys):
    path = _write(tmp_path, BASE)
    assert main(["gains", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    for token in ("K_opt", "kp_min", "certificate", "PASS", "robust l1"):
        assert token in out
    weak = _write(tmp_path, BASE + "control.k_p = 0.1\ncontrol.k_i = 20.0\n", name="weak.cfg")
    assert main(["gains", "--config", str(weak)]) == 0
    out = capsys.readouterr().out
    assert "warning" in out and "FAIL" in out


def test_sweep_of_one_matches_run(tmp_path):
    run_cfg = _write(tmp_path, BASE)
    sweep_cfg = _write(tmp_path, BASE + "sweep.matrix = sensorless:0:0\n", name="sweep.cfg")
    out_r, out_s = tmp_path / "r", tmp_path / "s"
    assert main(["run", "--config", str(run_cfg), "--out", str(out_r)]) == 0
    assert main(["sweep", "--config", str(sweep_cfg), "--out", str(out_s), "--jobs", "1"]) == 0
    with open(out_r / "summary.csv") as fh:
        run_row = next(csv.DictReader(fh))
    with open(out_s / "summary.csv") as fh:
        sweep_rows = list(csv.DictReader(fh))
    assert len(sweep_rows) == 1
    assert sweep_rows[0]["scenario"] == "sensorless_dL0_dR0"
    for key in ("W_J", "eta_E", "mean_lambda", "max_speed_err"):
        assert sweep_rows[0][key] == run_row[key]
    assert (out_s / "energy_compare.svg").exists()


def test_aep_command_micro_grid(tmp_path):
    text = BASE + ("sweep.matrix = encoder | sensorless:0:0\n"
                   "aep.v_cut_mps = 2.0\naep.bin_run_s = 2.0\naep.avg_window_s = 1.0\n")
    path = _write(tmp_path, text, name="aep.cfg")
    out = tmp_path / "aep"
    assert main(["aep", "--config", str(path), "--out", str(out), "--jobs", "1"]) == 0
    names = {f.name for f in out.iterdir()}
    assert names == {"aep_table.csv", "manifest.json",
                     "power_curve_encoder.csv", "power_curve_sensorless_dL0_dR0.csv"}
    with open(out / "power_curve_encoder.csv") as fh:
        curve = list(csv.DictReader(fh))
    assert [row["wind_mps"] for row in curve] == ["1.25", "1.75"]
    with open(out / "aep_table.csv") as fh:
        table = {row["scenario"]: row for row in csv.DictReader(fh)}
    assert float(table["encoder"]["ratio_to_encoder"]) == 1.0
    assert float(table["sensorless_dL0_dR0"]["aep_kwh"]) > 0.0
