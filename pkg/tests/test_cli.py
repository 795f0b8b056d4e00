import csv
import dataclasses
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from implantsim import cli
from implantsim.comms import BackscatterLinkModel, GalvanicLinkModel
from implantsim.config import (
    CONFIG_ENV, apply_overrides, axis, build_implant, default_scenario_dict, load_config, validate_config,
)
from implantsim.defaults import PROFILE_VERSION, profile
from implantsim.harvester import LoadSpec, RectifierSpec, StorageCap


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def scenario_file(tmp_path, hub_depth_mm=80.0, reader_tx=None):
    sc = default_scenario_dict()
    sc["nodes"][1]["position_mm"][2] = hub_depth_mm
    sc["nodes"][2]["position_mm"][2] = hub_depth_mm
    if reader_tx is not None:
        sc["nodes"][0]["p_tx_dbm"] = reader_tx
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(sc))
    return path


# --- sweep-depth -----------------------------------------------------------------------

@pytest.fixture(scope="module")
def depth_rows(tmp_path_factory):
    out = tmp_path_factory.mktemp("depth")
    assert run_cli("sweep-depth", "--out", out) == 0
    return read_csv(out / "sweep_depth.csv"), out


def test_sweep_depth_header(depth_rows):
    rows, out = depth_rows
    header = (out / "sweep_depth.csv").read_text().splitlines()[0]
    assert header == "freq_hz,depth_mm,coupling_db,p_rx_dbm,p_dc_uw,v_boost,sustainable_sensor_uw"
    assert len(rows) == 7 * 16


def test_sweep_depth_link_budget_anchor(depth_rows):
    rows, _ = depth_rows
    r = next(r for r in rows if float(r["freq_hz"]) == 401e6 and float(r["depth_mm"]) == 100)
    assert float(r["p_rx_dbm"]) == -10.0
    assert float(r["p_dc_uw"]) == 40.0
    assert float(r["coupling_db"]) == -33.0


def test_sweep_depth_surface_row_is_c0(depth_rows):
    from implantsim.antenna_link import default_coupling
    rows, _ = depth_rows
    c0 = default_coupling()
    for r in rows:
        if float(r["depth_mm"]) == 0:
            assert float(r["coupling_db"]) == pytest.approx(float(c0.c0(float(r["freq_hz"]))), rel=1e-5)


def test_sweep_depth_monotone_per_frequency(depth_rows):
    rows, _ = depth_rows
    for f in {r["freq_hz"] for r in rows}:
        col = [float(r["coupling_db"]) for r in rows if r["freq_hz"] == f]
        assert np.all(np.diff(col) < 0)


def test_sweep_depth_workers_give_identical_bytes(tmp_path, depth_rows):
    _, out = depth_rows
    assert run_cli("sweep-depth", "--out", tmp_path, "--workers", 3) == 0
    assert (tmp_path / "sweep_depth.csv").read_bytes() == (out / "sweep_depth.csv").read_bytes()


# --- sweep-backscatter ----------------------------------------------------------------------

def test_sweep_backscatter(tmp_path):
    assert run_cli("sweep-backscatter", "--out", tmp_path) == 0
    text = (tmp_path / "sweep_backscatter.csv").read_text()
    assert text.splitlines()[0] == "depth_cm,p_rx_dbm,margin_db,detected"
    rows = read_csv(tmp_path / "sweep_backscatter.csv")
    by_depth = {float(r["depth_cm"]): r for r in rows}
    assert float(by_depth[8.5]["margin_db"]) == 0.0
    assert by_depth[0.0]["detected"] == "true"
    assert by_depth[9.0]["detected"] == "false"
    d = np.array([float(r["depth_cm"]) for r in rows])
    p = np.array([float(r["p_rx_dbm"]) for r in rows])
    np.testing.assert_allclose(np.diff(p) / np.diff(d), -2.9, atol=1e-4)  # 6 significant digits


# --- simulate ---------------------------------------------------------------------------------

def _sim(out, *extra):
    assert run_cli("simulate", "--out", out, *extra) == 0
    return {r["node"]: r for r in read_csv(out / "metrics.csv")}


def test_simulate_bundled_scenario_uses_both_links(tmp_path):
    m = _sim(tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert int(m["reader"]["delivered_bits"]) == 0
    assert summary["nodes"]["reader"]["received_bits"] > 0
    assert summary["nodes"]["periph"]["received_bits"] > 0
    assert int(m["hub"]["delivered_bits"]) > 0
    assert (tmp_path / "events.csv").read_text().startswith("t_ns,node,kind,detail\n")


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _sim(a)
    _sim(b)
    for name in ("events.csv", "metrics.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_simulate_hub_at_12cm_delivers_no_backscatter(tmp_path):
    _sim(tmp_path, "--scenario", scenario_file(tmp_path, 120.0))
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["nodes"]["reader"]["received_bits"] == 0


def test_simulate_reader_off(tmp_path):
    m = _sim(tmp_path, "--scenario", scenario_file(tmp_path, reader_tx="-inf"))
    assert int(m["hub"]["delivered_bits"]) == 0 and int(m["periph"]["delivered_bits"]) == 0
    assert m["hub"]["j_per_bit"] == ""


# --- linkbudget ---------------------------------------------------------------------------------

def test_linkbudget_at_10cm(capsys):
    assert run_cli("linkbudget") == 0
    text = capsys.readouterr().out
    assert "startup threshold           pass" in text
    lb = cli.link_budget(load_config(env={}))
    assert lb.p_tx_dbm == 23.0
    assert lb.coupling_db == pytest.approx(-33.0, abs=1e-12)
    assert lb.p_rx_dbm == pytest.approx(-10.0, abs=1e-12)
    assert lb.p_dc_w == pytest.approx(40e-6, rel=1e-12)
    assert lb.v_boost == pytest.approx(1.67, abs=0.01)
    assert lb.sustainable_sensor_w * 1e6 == pytest.approx(36.9, abs=0.1)
    assert lb.pulses_per_charge == 1 and lb.galvanic_detected


def test_linkbudget_at_surface_is_maximal():
    cfg = load_config(env={})
    top, mid = cli.link_budget(cfg, 0.0), cli.link_budget(cfg, 100.0)
    assert top.startup_ok
    for f in ("coupling_db", "p_rx_dbm", "p_dc_w", "v_boost", "sustainable_sensor_w", "backscatter_margin_db"):
        assert getattr(top, f) > getattr(mid, f)


def test_linkbudget_at_15cm_fails(tmp_path, capsys):
    assert run_cli("linkbudget", "--depth-mm", 150, "--out", tmp_path) == 0
    text = capsys.readouterr().out
    assert "fail" in text
    assert (tmp_path / "linkbudget.txt").read_text() == text
    assert not cli.link_budget(load_config(env={}), 150.0).startup_ok


# --- config, overrides and exit codes -----------------------------------------------------------------

def test_invalid_config_lists_every_violation(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"link": {"carrier_hz": 50e6, "bogus": 1}, "seed": -1}))
    assert run_cli("sweep-depth", "--config", cfg, "--out", tmp_path) == 2
    err = capsys.readouterr().err.splitlines()
    assert len(err) >= 3 and all(line.startswith("error: ") for line in err)
    assert not (tmp_path / "sweep_depth.csv").exists()


def test_malformed_json_is_a_validation_error(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert run_cli("linkbudget", "--config", cfg) == 2


def test_missing_config_is_io_error(tmp_path):
    assert run_cli("linkbudget", "--config", tmp_path / "nope.json") == 3


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run_cli("sweep-backscatter", "--out", blocker / "sub") == 3


def test_bad_scenario_is_validation_error(tmp_path):
    sc = default_scenario_dict()
    sc["traffic"][0]["source"] = "ghost"
    sc["nodes"][1]["position_mm"] = [0, 0, -5]
    path = tmp_path / "sc.json"
    path.write_text(json.dumps(sc))
    assert run_cli("simulate", "--scenario", path, "--out", tmp_path) == 2


def test_bad_workers_and_zero_step(tmp_path):
    assert run_cli("sweep-depth", "--workers", 0, "--out", tmp_path) == 2
    assert run_cli("sweep-depth", "--override", "sweep.depth_mm.step=0", "--out", tmp_path) == 2


def test_overrides_and_seed(tmp_path):
    assert run_cli("sweep-backscatter", "--out", tmp_path, "--override", "link.p_tx_dbm=13") == 0
    row = next(r for r in read_csv(tmp_path / "sweep_backscatter.csv") if float(r["depth_cm"]) == 8.5)
    assert float(row["margin_db"]) == -10.0
    cfg = apply_overrides(profile(), ["seed=5", "stack.kind=skin_fat_muscle", "sweep.freqs_hz=[401e6]"])
    assert cfg["seed"] == 5 and cfg["stack"]["kind"] == "skin_fat_muscle" and cfg["sweep"]["freqs_hz"] == [401e6]
    assert validate_config(cfg) == []
    with pytest.raises(ValueError):
        apply_overrides(profile(), ["no_equals_sign"])


def test_env_var_supplies_default_config(tmp_path, monkeypatch):
    cfg = tmp_path / "env.json"
    cfg.write_text(json.dumps({"linkbudget": {"depth_mm": 150.0}}))
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    assert load_config()["linkbudget"]["depth_mm"] == 150.0
    assert load_config(env={})["linkbudget"]["depth_mm"] == 100.0


def test_profile_version_checked():
    cfg = profile()
    assert cfg["profile_version"] == PROFILE_VERSION
    cfg["profile_version"] = PROFILE_VERSION + 1
    assert any("profile_version" in e for e in validate_config(cfg))


def test_axis_is_inclusive():
    np.testing.assert_allclose(axis({"start": 0, "stop": 12, "step": 0.5}), np.arange(25) * 0.5)


def test_profile_matches_library_defaults():
    p = profile()
    assert BackscatterLinkModel(**p["backscatter"]) == BackscatterLinkModel()
    assert GalvanicLinkModel(**p["galvanic"]) == GalvanicLinkModel()
    implant = build_implant(p)
    assert implant.rectifier == RectifierSpec()
    assert implant.cap == StorageCap()
    assert implant.loads == LoadSpec()
    assert dataclasses.asdict(implant)["matching_Q"] == 10.0


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "implantsim.cli", "linkbudget", "--depth-mm", "0"],
                         capture_output=True, text=True, cwd=tmp_path,
                         env={k: v for k, v in os.environ.items() if k != CONFIG_ENV})
    assert res.returncode == 0, res.stderr
    assert "pass" in res.stdout
    usage = subprocess.run([sys.executable, "-m", "implantsim.cli", "frobnicate"], capture_output=True, text=True)
    assert usage.returncode == 2


def test_csv_columns_never_vary(depth_rows):
    _, out = depth_rows
    widths = {len(r) for r in csv.reader(io.StringIO((out / "sweep_depth.csv").read_text()))}
    assert widths == {7}
