import copy
import json

import pytest

from capillary1d.config import ConfigError
from capillary1d.experiments import (
    SweepError,
    SweepSpec,
    curvature_profile_study,
    run_sweep,
    threshold_study,
)

TINY = {
    "schema_version": 1,
    "domain": {"l": 1.0, "N": 8, "oversample": 8},
    "model": {"n": 2.0, "delta": 0.1, "epsilon": 0.1, "eta": 0.0,
              "pressure_mode": "nonlinear", "entropy_anchor": "auto"},
    "integrator": {"method": "rkf45", "rtol": 1e-7, "atol": 1e-9, "T": 5e-4,
                   "snapshots": 4},
    "initial_data": {"kind": "cosine_bump", "parameters": {"base": 1.0, "amplitude": 0.3}},
    "diagnostics": {"holder_probe": True},
}


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec(parameter="mu", values=(1, 2, 3), base_config=TINY)
    with pytest.raises(ConfigError):
        SweepSpec(parameter="eta", values=(1.0, 0.1), base_config=TINY)
    with pytest.raises(ConfigError):
        SweepSpec(parameter="eta", values=(1.0, 0.1, 0.5), base_config=TINY)


def test_eta_sweep_structure_and_verdicts():
    spec = SweepSpec(parameter="eta", values=(1.0, 0.1, 0.01), base_config=TINY)
    report = run_sweep(spec)
    assert report["complete"]
    assert len(report["members"]) == 3
    # provenance: every member embeds its full resolved config
    for m, v in zip(report["members"], (1.0, 0.1, 0.01)):
        assert m["config"]["model"]["eta"] == v
        assert m["config"]["integrator"]["T"] == TINY["integrator"]["T"]
    assert len(report["cauchy_l2_differences"]) == 2
    # the eta cap is redundant for bounded data: trajectories are Cauchy as
    # eta -> 0 and the sup-norm style maxima stay uniform
    diffs = report["cauchy_l2_differences"]
    assert diffs[1] < diffs[0]
    assert report["verdicts"]["energy_max"] == "bounded-uniformly"
    assert report["verdicts"]["y_max_below_one"]


def test_sweep_determinism():
    spec = SweepSpec(parameter="delta", values=(0.3, 0.1, 0.03), base_config=TINY)
    r1 = run_sweep(spec)
    r2 = run_sweep(spec)
    assert json.dumps(r1, sort_keys=True, default=str) == json.dumps(r2, sort_keys=True, default=str)


def test_sweep_parallel_matches_sequential():
    # worker processes assemble in submission order: bytes must not depend on jobs
    seq = run_sweep(SweepSpec(parameter="delta", values=(0.3, 0.1, 0.03),
                              base_config=TINY, jobs=1))
    par = run_sweep(SweepSpec(parameter="delta", values=(0.3, 0.1, 0.03),
                              base_config=TINY, jobs=2))
    assert (json.dumps(seq, sort_keys=True, default=str)
            == json.dumps(par, sort_keys=True, default=str))


def test_delta_sweep_uniform_verdict_logic():
    spec = SweepSpec(parameter="delta", values=(0.3, 0.1, 0.03), base_config=TINY)
    report = run_sweep(spec)
    assert "uniform" in report["verdicts"]
    assert report["verdicts"]["uniform"] == (
        report["verdicts"]["h2_max"] == "bounded-uniformly"
        and report["verdicts"]["y_max_below_one"])


def test_sweep_partial_report_on_failure():
    bad = copy.deepcopy(TINY)
    # an anchor below the data forces an abort in every member
    bad["model"]["entropy_anchor"] = 0.5
    bad["diagnostics"] = {"track_entropy": False}
    spec = SweepSpec(parameter="eta", values=(1.0, 0.1, 0.01), base_config=bad)
    with pytest.raises(SweepError) as err:
        run_sweep(spec)
    partial = err.value.partial_report
    assert not partial["complete"]
    assert "failure" in partial


def test_n_sweep_cauchy_decreasing():
    cfg = copy.deepcopy(TINY)
    cfg["initial_data"] = {"kind": "cosine_bump", "parameters": {"base": 1.0, "amplitude": 0.6}}
    spec = SweepSpec(parameter="N", values=(8, 16, 32), base_config=cfg)
    report = run_sweep(spec)
    diffs = report["cauchy_l2_differences"]
    assert diffs[1] < diffs[0]
    assert report["cauchy_trend"] == "decreasing"


def test_profile_study_droplet():
    cfg = copy.deepcopy(TINY)
    cfg["domain"]["N"] = 12
    cfg["initial_data"] = {"kind": "droplet",
                           "parameters": {"floor": 1e-3, "amplitude": 1.0, "power": 3}}
    cfg["model"]["epsilon"] = 0.3
    cfg["model"]["n"] = 2.0
    cfg["diagnostics"] = {"track_entropy": False}
    cfg["integrator"]["T"] = 2e-3
    report = curvature_profile_study(cfg)
    assert not report["degenerate"]
    nl = report["modes"]["nonlinear"]
    assert nl["final"]["cov_kappa"] < nl["initial"]["cov_kappa"]
    li = report["modes"]["linear"]
    assert li["final"]["cov_uxx"] < li["initial"]["cov_uxx"]


def test_profile_study_flat_degenerate():
    cfg = copy.deepcopy(TINY)
    cfg["initial_data"] = {"kind": "constant", "parameters": {"value": 1.0}}
    cfg["diagnostics"] = {"track_entropy": False}
    report = curvature_profile_study(cfg)
    assert report["degenerate"]


def test_threshold_study_rows_and_skips():
    cfg = copy.deepcopy(TINY)
    cfg["domain"]["N"] = 12
    cfg["initial_data"] = {"kind": "droplet",
                           "parameters": {"floor": 1e-2, "amplitude": 1.0, "power": 3}}
    cfg["model"]["epsilon"] = 1e-2
    report = threshold_study([1.5, 3.0], cfg)
    assert [row["n"] for row in report["rows"]] == [1.5, 3.0]
    for row in report["rows"]:
        assert "skipped" not in row
        assert row["min_u_overall"] > 0.0  # thick floor, short horizon
        assert row["config"]["model"]["n"] == row["n"]
    # zero-touching data is inadmissible for n >= 2 under entropy tracking
    cfg_zero = copy.deepcopy(cfg)
    cfg_zero["initial_data"] = {"kind": "coeffs", "parameters": {"values": [0.0]}}
    report2 = threshold_study([2.5], cfg_zero)
    assert "skipped" in report2["rows"][0]
