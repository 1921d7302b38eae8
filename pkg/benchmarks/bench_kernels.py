#!/usr/bin/env python3
"""Benchmark the fused RHS kernel: numba @njit vs pure-numpy fallback.

Times a single kernel call across problem sizes and one short end-to-end
simulation with each path.  Run from the repo root:

    python3 benchmarks/bench_kernels.py

CAPILLARY1D_NO_NUMBA=1 would force the numpy path package-wide; here both
implementations are driven directly so one process covers the comparison.
"""

import time

import numpy as np

import capillary1d.kernels as kernels
from capillary1d.basis import DomainSpec, project
from capillary1d.config import run_config
from capillary1d.galerkin import _kernel_args
from capillary1d.model import ModelParams


def time_call(fn, args, repeat=2000):
    fn(*args)  # warm-up (JIT compile on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernel():
    print("single RHS call (seconds/call)")
    print(f"{'N':>4} {'G':>5} {'numpy':>12} {'numba':>12} {'speedup':>8}")
    params = ModelParams(n=2.0, delta=0.1, epsilon=0.1, eta=0.05)
    for N in (8, 16, 32, 64):
        domain = DomainSpec(half_length=1.0, modes=N)
        c = project(lambda x: 1.0 + 0.5 * np.cos(np.pi * x), domain).coeffs
        args = (np.ascontiguousarray(c),) + _kernel_args(params, domain, (1.5, 2.0))
        t_np = time_call(kernels.rhs_numpy, args)
        if kernels.rhs_numba is not None:
            t_nb = time_call(kernels.rhs_numba, args)
            print(f"{N:>4} {domain.grid_size:>5} {t_np:>12.3e} {t_nb:>12.3e} {t_np/t_nb:>8.2f}")
        else:
            print(f"{N:>4} {domain.grid_size:>5} {t_np:>12.3e} {'n/a':>12} {'n/a':>8}")


BENCH_CONFIG = {
    "schema_version": 1,
    "domain": {"l": 1.0, "N": 16, "oversample": 8},
    "model": {"n": 2.0, "delta": 0.1, "epsilon": 0.1, "eta": 0.05,
              "pressure_mode": "nonlinear", "entropy_anchor": "auto"},
    "integrator": {"method": "rkf45", "rtol": 1e-8, "atol": 1e-10,
                   "T": 0.005, "snapshots": 3},
    "initial_data": {"kind": "cosine_bump", "parameters": {"base": 1.0, "amplitude": 0.5}},
    "diagnostics": {"track_entropy": False},
}


def bench_simulation():
    print("\nend-to-end reference-style run (N=16, T=0.005)")
    rows = []
    for label, impl in (("numpy", kernels.rhs_numpy), ("numba", kernels.rhs_numba)):
        if impl is None:
            continue
        kernels.rhs = impl
        run_config(BENCH_CONFIG)  # warm-up
        t0 = time.perf_counter()
        out = run_config(BENCH_CONFIG)
        dt = time.perf_counter() - t0
        rows.append((label, dt, out.result.stats.rhs_calls))
    for label, dt, calls in rows:
        print(f"  {label:>6}: {dt:8.3f} s  ({calls} RHS calls, {dt/calls*1e6:7.2f} us/call)")
    if len(rows) == 2:
        print(f"  speedup: {rows[0][1]/rows[1][1]:.2f}x")


if __name__ == "__main__":
    print(f"numba available: {kernels.HAVE_NUMBA}")
    bench_kernel()
    bench_simulation()
