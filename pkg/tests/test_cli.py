import json
import os

import numpy as np
import pytest

from capillary1d.cli import main

BASE = {
    "schema_version": 1,
    "domain": {"l": 1.0, "N": 8, "oversample": 8},
    "model": {"n": 2.0, "delta": 0.1, "epsilon": 0.1, "eta": 0.0,
              "pressure_mode": "nonlinear", "entropy_anchor": "auto"},
    "integrator": {"method": "rkf45", "rtol": 1e-7, "atol": 1e-9, "T": 5e-4,
                   "snapshots": 4},
    "initial_data": {"kind": "cosine_bump", "parameters": {"base": 1.0, "amplitude": 0.3}},
    "diagnostics": {"holder_probe": False},
}


@pytest.fixture
def cfgfile(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(BASE))
    return str(p)


def test_simulate_writes_expected_artifacts(cfgfile, tmp_path, capsys):
    out = tmp_path / "run"
    rc = main(["simulate", "--config", cfgfile, "--out", str(out)])
    assert rc == 0
    series = (out / "series.csv").read_text()
    header = series.splitlines()[0]
    assert header == ("t,mass,energy_surface,energy_delta,dissipation_cum,entropy,"
                      "entropy_dissipation_cum,min_u,max_u,zero_frac,y_max,h1,h2,weak_residual")
    assert len(series.splitlines()) == 5  # header + 4 snapshots
    assert (out / "snap_0.csv").read_text().splitlines()[0] == "x,u,ux,uxx,p,Q"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["model"]["entropy_anchor"] != "auto"
    assert "wall_clock_seconds" in summary


def test_simulate_constant_mass_column(tmp_path):
    cfg = dict(BASE, initial_data={"kind": "constant", "parameters": {"value": 1.5}})
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(p), "--out", str(out)]) == 0
    rows = (out / "series.csv").read_text().splitlines()[1:]
    masses = {row.split(",")[1] for row in rows}
    assert len(masses) == 1  # byte-identical mass on every row


def test_simulate_missing_config_exit_2(tmp_path, capsys):
    rc = main(["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert rc == 2
    err = capsys.readouterr().err
    record = json.loads(err.strip().splitlines()[-1])
    assert record["exit_code"] == 2
    assert "not found" in record["message"]


def test_simulate_rejected_data_exit_2(tmp_path, capsys):
    cfg = dict(BASE, initial_data={"kind": "constant", "parameters": {"value": -1.0}})
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    rc = main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_simulate_abort_exit_3(tmp_path, capsys):
    # fixed-step far above the stability limit: blow-up -> integrator abort
    cfg = json.loads(json.dumps(BASE))
    cfg["integrator"] = {"method": "rk4", "dt": 0.05, "T": 1.0, "snapshots": 3}
    cfg["diagnostics"] = {"track_entropy": False}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    rc = main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")])
    assert rc == 3
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "SimulationAbort"


def test_simulate_roundtrip_byte_identical(cfgfile, tmp_path):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    assert main(["simulate", "--config", cfgfile, "--out", str(out1)]) == 0
    # re-run from the embedded resolved config
    summary = json.loads((out1 / "summary.json").read_text())
    p2 = tmp_path / "resolved.json"
    p2.write_text(json.dumps(summary["config"]))
    assert main(["simulate", "--config", str(p2), "--out", str(out2)]) == 0
    assert (out1 / "series.csv").read_bytes() == (out2 / "series.csv").read_bytes()


def test_set_overrides(cfgfile, tmp_path):
    out = tmp_path / "o"
    rc = main(["simulate", "--config", cfgfile, "--out", str(out),
               "--set", "integrator.T=2e-4", "--set", "integrator.snapshots=3"])
    assert rc == 0
    rows = (out / "series.csv").read_text().splitlines()
    assert len(rows) == 4
    assert rows[-1].split(",")[0] == repr(2e-4)


def test_sweep_cli(cfgfile, tmp_path):
    out = tmp_path / "sw"
    rc = main(["sweep", "--config", cfgfile, "--out", str(out),
               "--param", "delta", "--values", "0.3,0.1,0.03"])
    assert rc == 0
    report = json.loads((out / "sweep_report.json").read_text())
    assert report["parameter"] == "delta"
    assert [m["config"]["model"]["delta"] for m in report["members"]] == [0.3, 0.1, 0.03]
    csv_lines = (out / "sweep_report.csv").read_text().splitlines()
    assert len(csv_lines) == 4


def test_sweep_epsilon_deep_gate(cfgfile, tmp_path):
    rc = main(["sweep", "--config", cfgfile, "--out", str(tmp_path / "sw"),
               "--param", "epsilon", "--values", "1e-2,1e-3,1e-4"])
    assert rc == 2


def test_compare_cli(tmp_path):
    cfg = json.loads(json.dumps(BASE))
    cfg["domain"]["N"] = 12
    cfg["initial_data"] = {"kind": "droplet",
                           "parameters": {"floor": 1e-2, "amplitude": 1.0, "power": 3}}
    cfg["model"]["epsilon"] = 0.3
    cfg["diagnostics"] = {"track_entropy": False}
    cfg["integrator"]["T"] = 1e-3
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    out = tmp_path / "cmp"
    assert main(["compare", "--config", str(p), "--out", str(out)]) == 0
    report = json.loads((out / "profile_report.json").read_text())
    assert set(report["modes"]) == {"nonlinear", "linear"}
    assert (out / "profile_nonlinear.csv").exists()
    assert (out / "profile_linear.csv").exists()


def test_thresholds_cli(tmp_path):
    cfg = json.loads(json.dumps(BASE))
    cfg["domain"]["N"] = 12
    cfg["initial_data"] = {"kind": "droplet",
                           "parameters": {"floor": 1e-2, "amplitude": 0.5, "power": 3}}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    out = tmp_path / "th"
    assert main(["thresholds", "--config", str(p), "--out", str(out),
                 "--n-values", "1.5,2.5"]) == 0
    report = json.loads((out / "thresholds_report.json").read_text())
    assert [r["n"] for r in report["rows"]] == [1.5, 2.5]
    assert (out / "thresholds.csv").exists()


def test_float_format_is_shortest_roundtrip():
    from capillary1d.cli import _fmt

    for v in (0.1, 1e-6, 2.0 / 3.0, np.float64(0.30000000000000004)):
        assert float(_fmt(v)) == float(v)
    assert _fmt(float("nan")) == "nan"
