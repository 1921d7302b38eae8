"""Command-line interface: simulate | sweep | compare | thresholds | verify.

Batch tool with plot-ready outputs; no interactive UI.  All floating-point
output is printed with shortest round-trip representation, files are UTF-8
with LF line endings, and CAPILLARY1D_SEED pins any randomized sampling, so
identical configs reproduce identical bytes.

Exit codes: 0 success, 2 validation/config failure, 3 integrator abort or
study failure (machine-readable error JSON goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .basis import synthesize, tables
from .config import (
    ConfigError,
    RunOutput,
    apply_overrides,
    load_config,
    run_config,
)
from .diagnostics import slope_bound_quantities
from .experiments import (
    SweepError,
    SweepSpec,
    curvature_profile_study,
    run_sweep,
    threshold_study,
)
from .galerkin import SimulationAbort
from .model import InitialDataError, galerkin_pressure_coeffs

SERIES_HEADER = ("t,mass,energy_surface,energy_delta,dissipation_cum,entropy,"
                 "entropy_dissipation_cum,min_u,max_u,zero_frac,y_max,h1,h2,weak_residual")
SNAP_HEADER = "x,u,ux,uxx,p,Q"

DEFAULT_SWEEP_VALUES = {
    "epsilon": (1e-1, 1e-2, 1e-3),
    "delta": (0.3, 0.1, 0.03, 0.01),
    "eta": (1.0, 0.1, 0.01),
    "N": (8, 16, 32),
}
EPSILON_DEEP_FLOOR = 1e-3


def _fmt(v) -> str:
    """Shortest round-trip decimal representation."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8", newline="\n")


def write_series_csv(out: RunOutput, path: Path) -> None:
    lines = [SERIES_HEADER]
    for r in out.records:
        lines.append(",".join(_fmt(v) for v in (
            r.t, r.mass, r.energy_surface, r.energy_delta, r.dissipation_cum,
            r.entropy, r.entropy_dissipation_cum, r.min_u, r.max_u, r.zero_frac,
            r.y_max, r.h1, r.h2, r.weak_residual)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_snapshot_csvs(out: RunOutput, outdir: Path) -> list[str]:
    rc = out.config
    t = tables(rc.domain)
    names = []
    for i in range(out.result.snapshot_times.size):
        fld = synthesize(out.result.snapshot_field(i), rc.domain, order=2)
        d = galerkin_pressure_coeffs(out.result.snapshot_field(i), rc.params, rc.domain)
        p = t.E @ d.coeffs
        lines = [SNAP_HEADER]
        for g in range(t.x.size):
            lines.append(",".join(_fmt(v) for v in (
                t.x[g], fld.u[g], fld.ux[g], fld.uxx[g], p[g], fld.Q[g])))
        name = f"snap_{i}.csv"
        (outdir / name).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        names.append(name)
    return names


def _simulate_verdicts(out: RunOutput) -> dict:
    E = out.result.nodes.energy
    mass0 = out.records[0].mass
    mass_drift = max(abs(r.mass - mass0) for r in out.records) / max(abs(mass0), 1e-300)
    slope = slope_bound_quantities(
        out.result.snapshot_field(out.result.snapshot_times.size - 1), out.config.domain)
    resid = float(np.abs(E + out.result.nodes.dissipation_cum - E[0]).max())
    return {
        "mass_relative_drift": mass_drift,
        "energy_monotone": bool(np.all(np.diff(E) <= 1e-9 * max(E[0], 1.0))),
        "energy_identity_max_residual": resid,
        "slope_bound_satisfied": slope.satisfied,
        "final_y_max": slope.y_max,
        "final_slope_threshold": slope.threshold,
    }


def write_run_artifacts(out: RunOutput, outdir: Path, wall_clock: float) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    write_series_csv(out, outdir / "series.csv")
    snaps = write_snapshot_csvs(out, outdir)
    summary = {
        "schema_version": out.config.resolved["schema_version"],
        "config": out.config.resolved,
        "verdicts": _simulate_verdicts(out),
        "flags": out.result.flags,
        "validation_warnings": out.validation_warnings,
        "stats": {
            "steps_accepted": out.result.stats.accepted,
            "steps_rejected": out.result.stats.rejected,
            "rhs_calls": out.result.stats.rhs_calls,
            "dt_last": out.result.stats.dt_last,
        },
        "snapshots": snaps,
        "holder_probe": (None if out.probe is None else {
            "exponent_time": out.probe.exponent_time,
            "constant_time": out.probe.constant_time,
            "exponent_space": out.probe.exponent_space,
            "constant_space": out.probe.constant_space,
            "n_samples": out.probe.n_samples,
            "conclusive": out.probe.conclusive,
        }),
        "wall_clock_seconds": wall_clock,
    }
    _write_json(outdir / "summary.json", summary)
    return summary


def _emit_error(exc: Exception, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def _load(args) -> dict:
    cfg = load_config(args.config) if args.config else {}
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    return cfg


def cmd_simulate(args) -> int:
    try:
        cfg = _load(args)
        t0 = time.perf_counter()
        out = run_config(cfg)
        wall = time.perf_counter() - t0
        write_run_artifacts(out, Path(args.out), wall)
    except (ConfigError, InitialDataError) as exc:
        return _emit_error(exc, 2)
    except SimulationAbort as exc:
        return _emit_error(exc, 3)
    print(f"wrote {args.out}/series.csv ({len(out.records)} snapshots, "
          f"{out.result.stats.accepted} steps)")
    return 0


def _sweep_csv(report: dict, path: Path) -> None:
    cols = ["value", "energy_max", "entropy_max", "h2_max", "y_max", "min_u",
            "holder_M", "steps_accepted"]
    lines = [",".join(cols)]
    for v, m in zip(report["values"], report["members"]):
        row = [v] + [m["maxima"][c] for c in cols[1:-1]] + [m["steps_accepted"]]
        lines.append(",".join("" if x is None else _fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def cmd_sweep(args) -> int:
    try:
        cfg = _load(args)
        if args.values:
            values = tuple(float(v) for v in args.values.split(","))
        else:
            values = DEFAULT_SWEEP_VALUES[args.param]
        if args.param == "epsilon" and min(values) < EPSILON_DEEP_FLOOR and not args.deep:
            raise ConfigError(
                f"epsilon below {EPSILON_DEEP_FLOOR} with degenerate data needs --deep")
        spec = SweepSpec(parameter=args.param, values=values, base_config=cfg,
                         jobs=args.jobs)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        try:
            report = run_sweep(spec)
        except SweepError as exc:
            _write_json(outdir / "sweep_report.json", exc.partial_report)
            return _emit_error(exc, 3)
        _write_json(outdir / "sweep_report.json", report)
        _sweep_csv(report, outdir / "sweep_report.csv")
    except (ConfigError, InitialDataError) as exc:
        return _emit_error(exc, 2)
    except SimulationAbort as exc:
        return _emit_error(exc, 3)
    print(f"wrote {args.out}/sweep_report.json "
          f"(param={report['parameter']}, {len(report['members'])} members)")
    return 0


def cmd_compare(args) -> int:
    try:
        cfg = _load(args)
        report = curvature_profile_study(cfg)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_json(outdir / "profile_report.json", report)
        for mode in ("nonlinear", "linear"):
            m = report["modes"][mode]
            lines = ["x,u0,uT"]
            for x, a, b in zip(m["profile_x"], m["profile_u0"], m["profile_uT"]):
                lines.append(",".join(_fmt(v) for v in (x, a, b)))
            (outdir / f"profile_{mode}.csv").write_text(
                "\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except (ConfigError, InitialDataError) as exc:
        return _emit_error(exc, 2)
    except SimulationAbort as exc:
        return _emit_error(exc, 3)
    print(f"wrote {args.out}/profile_report.json")
    return 0


def cmd_thresholds(args) -> int:
    try:
        cfg = _load(args)
        n_values = [float(v) for v in args.n_values.split(",")]
        report = threshold_study(n_values, cfg)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_json(outdir / "thresholds_report.json", report)
        cols = ["n", "min_u_overall", "min_u_final", "zero_frac_max", "skipped"]
        lines = [",".join(cols)]
        for row in report["rows"]:
            lines.append(",".join(
                _fmt(row[c]) if c in row and not isinstance(row.get(c), str)
                else str(row.get(c, "")) for c in cols))
        (outdir / "thresholds.csv").write_text(
            "\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except (ConfigError, InitialDataError) as exc:
        return _emit_error(exc, 2)
    except SimulationAbort as exc:
        return _emit_error(exc, 3)
    print(f"wrote {args.out}/thresholds_report.json")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_all, render_table

    results = run_all(deep=args.deep)
    table = render_table(results)
    print(table)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / "verify_report.json",
                {"criteria": [r.as_dict() for r in results],
                 "all_passed": all(r.passed for r in results)})
    (outdir / "verify_table.txt").write_text(table + "\n", encoding="utf-8", newline="\n")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="capillary1d",
        description="1-D thin-film solver with exact-curvature surface tension")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="JSON config path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
        p.add_argument("--deep", action="store_true",
                       help="allow expensive settings (epsilon < 1e-3)")
        p.add_argument("--set", action="append", default=[], metavar="KEY.PATH=VALUE",
                       help="config override, repeatable")

    p = sub.add_parser("simulate", help="run one simulation and write series/snapshots")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a regularization-parameter or N sweep")
    common(p)
    p.add_argument("--param", required=True, choices=("eta", "epsilon", "delta", "N"))
    p.add_argument("--values", help="comma-separated values (default per parameter)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="curvature-profile study (both pressure modes)")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("thresholds", help="mobility-exponent threshold study")
    common(p)
    p.add_argument("--n-values", required=True, help="comma-separated exponents")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("verify", help="run the acceptance criteria end-to-end")
    common(p, needs_config=False)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
