"""Hot numeric kernels for the Galerkin right-hand side.

Stability-limited explicit stepping evaluates the RHS 1e4-1e5 times per run,
so the whole chain (synthesis -> mobility -> pressure coefficients -> flux ->
projection) is fused into one kernel.  The numba-jitted version is used when
available; set CAPILLARY1D_NO_NUMBA=1 to force the pure-numpy fallback.
Both paths stay importable (``rhs_numpy`` / ``rhs_numba``) so the benchmark
can compare them.
"""

from __future__ import annotations

import os

import numpy as np

PRESSURE_NONLINEAR = 0
PRESSURE_LINEAR = 1
MOBILITY_STANDARD = 0
MOBILITY_CONSTANT = 1


def _rhs_impl(c, E, Ex, ET, ExT, lam, w, n, delta, epsilon, eta,
              pressure_kind, mobility_kind, r_values):
    """Fused RHS evaluation.

    Returns (c_dot, d, u, flux, aux): pressure coefficients d, grid values of
    u and of the flux m(u) p_x, and aux = [D, S, D_r..., E_surface, E_delta,
    max|u|] where D is the flux dissipation integrand's integral, S the
    entropy-dissipation one, D_r the r-weighted dissipations.
    """
    u = np.dot(E, c)
    ux = np.dot(Ex, c)
    uxx = -np.dot(E, lam * c)

    Qsq = 1.0 + ux * ux
    Q = np.sqrt(Qsq)

    # weak-form pressure density (u_x/Q + delta u_x, or its linearization)
    if pressure_kind == PRESSURE_LINEAR:
        s = (1.0 + delta) * ux
    else:
        s = ux / Q + delta * ux

    d = np.dot(ExT, w * s)
    px = np.dot(Ex, d)

    if mobility_kind == MOBILITY_CONSTANT:
        mob = np.full_like(u, epsilon)
    else:
        mraw = np.abs(u) ** n
        if eta > 0.0:
            mob = mraw / (1.0 + eta * mraw) + epsilon
        else:
            mob = mraw + epsilon

    flux = mob * px
    c_dot = -np.dot(ExT, w * flux)

    pxsq = px * px
    nr = r_values.shape[0]
    aux = np.empty(5 + nr)
    aux[0] = np.sum(w * mob * pxsq)
    aux[1] = np.sum(w * (uxx * uxx / (Q * Qsq) + delta * uxx * uxx))
    for k in range(nr):
        aux[2 + k] = np.sum(w * mob ** r_values[k] * pxsq)
    aux[2 + nr] = np.sum(w * Q)
    aux[3 + nr] = 0.5 * delta * np.sum(w * ux * ux)
    aux[4 + nr] = np.max(np.abs(u))
    return c_dot, d, u, flux, aux


rhs_numpy = _rhs_impl

try:
    if os.environ.get("CAPILLARY1D_NO_NUMBA", "0") == "1":
        raise ImportError("numba disabled via CAPILLARY1D_NO_NUMBA")
    from numba import njit

    rhs_numba = njit(cache=True)(_rhs_impl)
    HAVE_NUMBA = True
except ImportError:
    rhs_numba = None
    HAVE_NUMBA = False

rhs = rhs_numba if HAVE_NUMBA else rhs_numpy
USING_NUMBA = HAVE_NUMBA
