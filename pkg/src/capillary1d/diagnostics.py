"""Per-snapshot and per-trajectory quantities behind the a-priori estimates.

Everything the dissipation framework bounds is measured here: mass, surface
energy and its delta-term, flux and entropy dissipation, the entropy
integral, positivity measures, the slope ratio y = max|u_x|/Q with its
certified threshold, Hoelder probes, and the Galerkin weak residual.

Every snapshot time is treated as belonging to the full-measure good set;
outliers are reported, never excluded.  Unquantified generic constants are
rendered as boundedness/trend checks by the experiments module.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .basis import (
    DomainSpec,
    SpectralField,
    eigen_deriv,
    eigenpair,
    quadrature,
    sobolev_norms,
    synthesize,
    tables,
)
from .galerkin import SimulationAbort, SimulationResult, assemble_rhs
from .model import EntropyEval, ModelParams, galerkin_pressure_coeffs, mobility

# positivity-set membership: below spectral truncation noise at N <= 64
DEFAULT_TOL_ZERO_REL = 1e-7
# nonnegativity verdict; violations beyond this are genuine findings
DEFAULT_TOL_NEG_REL = 1e-8


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    energy_surface: float
    energy_delta: float
    dissipation_cum: float
    entropy: float
    entropy_dissipation_cum: float
    weighted_dissipation_cum: dict[float, float]
    min_u: float
    max_u: float
    zero_frac: float
    y_max: float
    ux_linf: float
    h1: float
    h2: float
    weak_residual: float


def snapshot_diagnostics(c: SpectralField, params: ModelParams, domain: DomainSpec,
                         entropy: EntropyEval | None = None,
                         tol_zero: float | None = None) -> DiagnosticsRecord:
    """Instantaneous fields of the record (cumulative ones filled by caller).

    Aborts when the entropy anchor is violated (sup u >= a) since G is only
    defined below the anchor.
    """
    t = tables(domain)
    fld = synthesize(c, domain, order=2)
    if tol_zero is None:
        tol_zero = DEFAULT_TOL_ZERO_REL * max(1.0, float(np.abs(fld.u).max()))
    d = galerkin_pressure_coeffs(c, params, domain)

    ent = float("nan")
    if entropy is not None:
        if float(fld.u.max()) >= entropy.anchor:
            raise SimulationAbort(
                f"entropy anchor violated in diagnostics: sup u = {fld.u.max():.6g}"
                f" >= a = {entropy.anchor:.6g}")
        vals = entropy.G(fld.u)
        ent = float("inf") if not np.all(np.isfinite(vals)) else quadrature(vals, domain)

    norms = sobolev_norms(c, domain)
    u_t = assemble_rhs(c, params, domain)
    resid, _ = flux_and_weak_residual(c, u_t, params, domain, tol_zero=tol_zero)
    return DiagnosticsRecord(
        t=float("nan"),
        mass=float(c.coeffs[0] * np.sqrt(2.0 * domain.half_length)),
        energy_surface=quadrature(fld.Q, domain),
        energy_delta=0.5 * params.delta * quadrature(fld.ux**2, domain),
        dissipation_cum=float("nan"),
        entropy=ent,
        entropy_dissipation_cum=float("nan"),
        weighted_dissipation_cum={},
        min_u=float(fld.u.min()),
        max_u=float(fld.u.max()),
        zero_frac=float(np.count_nonzero(fld.u < tol_zero)) / fld.u.size,
        y_max=float(np.max(np.abs(fld.ux) / fld.Q)),
        ux_linf=float(np.max(np.abs(fld.ux))),
        h1=norms.h1,
        h2=norms.h2,
        weak_residual=float(np.max(np.abs(resid))),
    )


def trajectory_records(result: SimulationResult, entropy: EntropyEval | None = None,
                       tol_zero: float | None = None) -> list[DiagnosticsRecord]:
    """One record per snapshot, with the cumulative integrals merged in."""
    records = []
    for i, s in enumerate(result.snapshot_times):
        rec = snapshot_diagnostics(result.snapshot_field(i), result.params,
                                   result.domain, entropy=entropy, tol_zero=tol_zero)
        rec.t = float(s)
        rec.dissipation_cum = float(result.dissipation_cum[i])
        rec.entropy_dissipation_cum = float(result.entropy_dissipation_cum[i])
        rec.weighted_dissipation_cum = {
            r: float(v[i]) for r, v in result.weighted_dissipation_cum.items()
        }
        records.append(rec)
    return records


def energy_identity_residual(result: SimulationResult) -> tuple[np.ndarray, float]:
    """|E(t) + int_0^t D - E(0)| on the accepted-step series.

    An identity for the semidiscrete flow: the residual carries
    time-integration error only and shrinks under tolerance refinement.
    """
    E = result.nodes.energy
    resid = np.abs(E + result.nodes.dissipation_cum - E[0])
    return resid, float(resid.max())


def entropy_identity_residual(result: SimulationResult, entropy: EntropyEval) -> tuple[np.ndarray, float]:
    """|int G(u(t)) - int G(u0) + entropy-dissipation(t)| at snapshot times.

    For the semidiscrete system this is only approximately zero (g(u^N) is
    not in the Galerkin space); the residual must shrink under N-refinement,
    which the acceptance suite checks across N in {8, 16, 32}.
    """
    vals = []
    for i in range(result.snapshot_times.size):
        fld = synthesize(result.snapshot_field(i), result.domain, order=0)
        g = entropy.G(fld.u)
        if not np.all(np.isfinite(g)):
            raise SimulationAbort("entropy integral infinite along the trajectory")
        vals.append(quadrature(g, result.domain))
    ent = np.asarray(vals)
    resid = np.abs(ent - ent[0] + result.entropy_dissipation_cum)
    return resid, float(resid.max())


def flux_and_weak_residual(c: SpectralField, u_t: SpectralField, params: ModelParams,
                           domain: DomainSpec, test_modes=None,
                           tol_zero: float = 1e-7) -> tuple[np.ndarray, float]:
    """Weak residuals r_j = (u_t, e_j) + (J, e_j') per test mode.

    J is the flux m(u) p_x restricted to the positivity set {u > tol_zero}
    and zero elsewhere.  For j <= N the residual vanishes to roundoff by
    Galerkin orthogonality; modes j > N quantify spatial truncation.
    Returns (residuals, scale) where scale is the natural cancellation size
    max(1, |(u_t, e_j)|, |(J, e_j')|).
    """
    if test_modes is None:
        test_modes = list(range(domain.modes + 1))
    t = tables(domain)
    fld = synthesize(c, domain, order=1)
    d = galerkin_pressure_coeffs(c, params, domain)
    px = t.Ex @ d.coeffs
    flux = mobility(fld.u, params) * px
    J = np.where(fld.u > tol_zero, flux, 0.0)
    ut_grid = t.E @ u_t.coeffs

    resid = np.empty(len(test_modes))
    scale = 1.0
    for i, j in enumerate(test_modes):
        ej, _ = eigenpair(j, domain)
        e_vals = ej(t.x)
        ex_vals = eigen_deriv(j, domain, t.x)
        a = float(np.dot(t.w, ut_grid * e_vals))
        b = float(np.dot(t.w, J * ex_vals))
        resid[i] = a + b
        scale = max(scale, abs(a), abs(b))
    return resid, scale


# -- Lemma-style W^{1,inf} and H^2 certification -------------------------------

@dataclass
class SlopeBoundReport:
    """Measured quantities of the slope-ratio bound chain.

    y_max = max |u_x|/Q < 1 always; the chain derives, from c1 = int Q and
    c2 = int u_xx^2/Q^3, a threshold M < 1 with y_max <= M whenever the two
    budget constants hold.  K is the Hoelder constant of Q^{-1/2} used in the
    chain: the sharp one-dimensional embedding gives [g]_{1/2} <= ||g_x||_L2
    (constant 1 for the seminorm) and ||g_x||_L2^2 <= c2/4, so K = sqrt(c2)/2.
    """

    y_max: float
    g_min: float
    g_h1: float
    h2_norm: float
    c1: float
    c2: float
    K: float
    threshold: float
    satisfied: bool


def slope_threshold(c1: float, c2: float, half_length: float, tol: float = 1e-13) -> float:
    """Solve (1/2) int dx / (K^2 |x-l| + sqrt(1-y^2)) = c1 for y by bisection.

    The integral has the closed form (1/(2K^2)) log(1 + 2 l K^2 / s) with
    s = sqrt(1-y^2); it increases continuously to +inf as y -> 1, so a root
    M in [0, 1) exists whenever the y = 0 value stays below c1 (always true,
    since c1 >= 2l).  K = sqrt(c2)/2.
    """
    l = half_length
    K2 = 0.25 * c2

    def lhs(y):
        s = np.sqrt(max(1.0 - y * y, 1e-300))
        if K2 == 0.0:
            return l / s
        return np.log1p(2.0 * l * K2 / s) / (2.0 * K2)

    if lhs(0.0) >= c1:
        return 0.0
    lo, hi = 0.0, 1.0 - 1e-16
    if lhs(hi) <= c1:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lhs(mid) <= c1:
            lo = mid
        else:
            hi = mid
    return lo


def slope_bound_quantities(c: SpectralField, domain: DomainSpec) -> SlopeBoundReport:
    """Slope-ratio scalars and the certified threshold for one snapshot."""
    fld = synthesize(c, domain, order=2)
    f = fld.ux / fld.Q
    y_max = float(np.max(np.abs(f)))
    g = fld.Q ** -0.5
    gx = -0.5 * f * fld.uxx / fld.Q ** 1.5
    g_h1 = float(np.sqrt(quadrature(g**2, domain) + quadrature(gx**2, domain)))
    c1 = quadrature(fld.Q, domain)
    c2 = quadrature(fld.uxx**2 / fld.Q**3, domain)
    M = slope_threshold(c1, c2, domain.half_length)
    return SlopeBoundReport(
        y_max=y_max,
        g_min=float(g.min()),
        g_h1=g_h1,
        h2_norm=sobolev_norms(c, domain).h2,
        c1=c1,
        c2=c2,
        K=0.5 * np.sqrt(c2),
        threshold=M,
        satisfied=y_max <= M,
    )


# -- Hoelder probes -------------------------------------------------------------

@dataclass
class HolderProbe:
    exponent_time: float
    constant_time: float
    exponent_space: float
    constant_space: float
    n_samples: int
    conclusive: bool
    note: str = ""


def _loglog_fit(dx: np.ndarray, dy: np.ndarray) -> tuple[float, float]:
    slope, intercept = np.polyfit(np.log(dx), np.log(dy), 1)
    return float(slope), float(np.exp(intercept))


def holder_probe(result: SimulationResult, n_locations: int = 16,
                 seed: int | None = None) -> HolderProbe:
    """Least-squares Hoelder exponents/constants from snapshot pairs.

    Fits log sup_x |u(t2,x)-u(t1,x)| against log|t2-t1| over all snapshot
    pairs (and the spatial analog with |x2-x1|^(1/2) scaling).  Estimates
    come with the sampling resolution; they are measurements, not asserted
    inequalities.  CAPILLARY1D_SEED fixes the sampled locations.
    """
    if seed is None:
        seed = int(os.environ.get("CAPILLARY1D_SEED", "0"))
    times = result.snapshot_times
    if times.size < 3:
        return HolderProbe(np.nan, np.nan, np.nan, np.nan, 0, False, "needs >= 3 snapshots")
    rng = np.random.default_rng(seed)
    t = tables(result.domain)
    G = t.x.size
    locs = np.sort(rng.choice(G, size=min(n_locations, G), replace=False))
    fields = np.stack([synthesize(result.snapshot_field(i), result.domain, order=0).u[locs]
                       for i in range(times.size)])

    dt_list, du_list = [], []
    for i in range(times.size):
        for j in range(i + 1, times.size):
            dt = times[j] - times[i]
            du = float(np.max(np.abs(fields[j] - fields[i])))
            if dt > 0 and du > 0:
                dt_list.append(dt)
                du_list.append(du)
    dxs, dus = [], []
    xs = t.x[locs]
    for i in range(times.size):
        row = fields[i]
        for a in range(len(locs)):
            for b in range(a + 1, len(locs)):
                dx = abs(xs[b] - xs[a])
                du = abs(row[b] - row[a])
                if dx > 0 and du > 0:
                    dxs.append(dx)
                    dus.append(du)

    if len(dt_list) < 3 or len(dxs) < 3:
        return HolderProbe(np.nan, np.nan, np.nan, np.nan,
                           len(dt_list) + len(dxs), False, "all increments vanish")
    bt, Mt = _loglog_fit(np.asarray(dt_list), np.asarray(du_list))
    bx, Kx = _loglog_fit(np.asarray(dxs), np.asarray(dus))
    return HolderProbe(exponent_time=bt, constant_time=Mt,
                       exponent_space=bx, constant_space=Kx,
                       n_samples=len(dt_list) + len(dxs), conclusive=True)


# -- positivity -----------------------------------------------------------------

@dataclass
class PositivityReport:
    min_u: np.ndarray
    zero_frac: np.ndarray
    tol_neg: float
    pos_floor: float
    nonneg_ok: bool
    zero_measure_ok: bool | None
    positive_ok: bool | None


def positivity_report(result: SimulationResult, params: ModelParams,
                      tol_zero: float | None = None,
                      pos_floor: float | None = None) -> PositivityReport:
    """Per-snapshot minima and zero-set fractions with trajectory verdicts.

    (a) min u >= -tol_neg for n >= 1 (nonnegativity up to truncation noise);
    (b) zero-set fraction at most one grid node for n >= 2;
    (c) min u >= pos_floor for n >= 8/3 given strictly positive data.
    Verdicts are reported, never raised: genuine violations (large delta,
    linear mode) are findings.
    """
    u0 = synthesize(result.snapshot_field(0), result.domain, order=0).u
    scale = max(1.0, float(np.abs(u0).max()))
    tol_neg = DEFAULT_TOL_NEG_REL * scale
    if tol_zero is None:
        tol_zero = DEFAULT_TOL_ZERO_REL * scale
    if pos_floor is None:
        pos_floor = 1e-2 * max(float(u0.min()), 0.0)

    mins, fracs = [], []
    for i in range(result.snapshot_times.size):
        u = synthesize(result.snapshot_field(i), result.domain, order=0).u
        mins.append(float(u.min()))
        fracs.append(float(np.count_nonzero(u < tol_zero)) / u.size)
    mins = np.asarray(mins)
    fracs = np.asarray(fracs)

    G = result.domain.grid_size
    return PositivityReport(
        min_u=mins,
        zero_frac=fracs,
        tol_neg=tol_neg,
        pos_floor=pos_floor,
        nonneg_ok=bool(mins.min() >= -tol_neg),
        zero_measure_ok=bool(fracs.max() <= 1.0 / G) if params.n >= 2.0 else None,
        positive_ok=(bool(mins.min() >= pos_floor)
                     if (params.n >= 8.0 / 3.0 and float(u0.min()) > 0.0) else None),
    )
