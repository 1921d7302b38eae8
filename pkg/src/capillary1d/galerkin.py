"""Reduced ODE system dc/dt = f(c) and its explicit time integration.

The right-hand side never forms the (N+1)x(N+1) Gram matrix: it synthesizes
u and u_x on the grid, builds the pressure coefficients from the weak
pairing, forms the flux density m(u) p_x pointwise and projects back --
algebraically identical to the eliminated double-sum form because the
pressure lives in the Galerkin space.  Component 0 of dc/dt is identically
zero (e_0' = 0), so mass is conserved to the last bit by every integrator.

Cumulative integrals (flux dissipation, entropy dissipation, r-weighted
dissipations) ride along as augmented components advanced through the same
Runge-Kutta tableau; step-size control acts on the coefficient vector only.
Dense output for snapshot observers is cubic Hermite on the accepted steps.

The degenerate limit (p_x defined only on the positivity set) is never
solved directly; it is probed through epsilon sweeps in the experiments
module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .basis import DomainSpec, SpectralField, tables
from .model import ModelParams

DT_MIN = 1e-12
DEFAULT_R_VALUES = (1.5, 2.0)


class SimulationAbort(RuntimeError):
    """Integration failed: step underflow, blow-up, or anchor violation."""


@dataclass(frozen=True)
class IntegratorSpec:
    """Time-stepping description.

    "rkf45" is adaptive with (rtol, atol) controlling the local error of the
    coefficient vector in the max norm; "rk4" is fixed-step with dt.
    Explicit methods need dt = O(lambda_N^-2) on the stiff linearized system;
    the controller finds that scale by rejecting steps whose error grows.
    """

    t_end: float
    method: str = "rkf45"
    rtol: float = 1e-8
    atol: float = 1e-10
    dt: float | None = None
    snapshot_times: tuple = ()

    def __post_init__(self):
        if self.method not in ("rkf45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.t_end > 0 and np.isfinite(self.t_end)):
            raise ValueError("t_end must be positive and finite")
        if self.method == "rk4" and (self.dt is None or self.dt <= 0):
            raise ValueError("rk4 needs a positive dt")
        if self.method == "rkf45" and (self.rtol <= 0 or self.atol <= 0):
            raise ValueError("rkf45 needs positive tolerances")
        for s in self.snapshot_times:
            if not (0.0 <= s <= self.t_end * (1 + 1e-12)):
                raise ValueError(f"snapshot time {s} outside [0, {self.t_end}]")


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    rhs_calls: int = 0
    dt_last: float = 0.0


@dataclass
class OdeState:
    t: float
    c: SpectralField
    dt: float | None = None
    stats: StepStats = field(default_factory=StepStats)


@dataclass
class NodeSeries:
    """Per-accepted-step scalars at full integrator fidelity."""

    t: np.ndarray
    energy_surface: np.ndarray
    energy_delta: np.ndarray
    dissipation_cum: np.ndarray
    entropy_dissipation_cum: np.ndarray
    weighted_dissipation_cum: dict[float, np.ndarray]
    max_abs_u: np.ndarray
    weak_residual: np.ndarray | None = None

    @property
    def energy(self) -> np.ndarray:
        return self.energy_surface + self.energy_delta


@dataclass
class SimulationResult:
    domain: DomainSpec
    params: ModelParams
    spec: IntegratorSpec
    snapshot_times: np.ndarray
    coeffs: np.ndarray                     # (n_snapshots, N+1)
    dissipation_cum: np.ndarray            # cumulative integrals at snapshots
    entropy_dissipation_cum: np.ndarray
    weighted_dissipation_cum: dict[float, np.ndarray]
    nodes: NodeSeries
    stats: StepStats
    flags: list[str]

    def snapshot_field(self, i: int) -> SpectralField:
        return SpectralField(self.coeffs[i].copy())


def _kernel_args(params: ModelParams, domain: DomainSpec, r_values) -> tuple:
    t = tables(domain)
    pk = kernels.PRESSURE_LINEAR if params.pressure_mode == "linear" else kernels.PRESSURE_NONLINEAR
    mk = kernels.MOBILITY_CONSTANT if params.mobility_mode == "constant" else kernels.MOBILITY_STANDARD
    return (t.E, t.Ex, t.ET, t.ExT, t.lam, t.w, float(params.n), float(params.delta),
            float(params.epsilon), float(params.eta), pk, mk,
            np.asarray(r_values, dtype=float))


def assemble_rhs(c: SpectralField, params: ModelParams, domain: DomainSpec) -> SpectralField:
    """dc/dt for the Galerkin system; (dc/dt)_0 == 0 exactly."""
    args = _kernel_args(params, domain, DEFAULT_R_VALUES)
    c_dot, _, _, _, _ = kernels.rhs(np.ascontiguousarray(c.coeffs), *args)
    if not np.all(np.isfinite(c_dot)):
        raise SimulationAbort("non-finite right-hand side")
    return SpectralField(c_dot)


# Fehlberg 4(5) tableau (propagates the 4th-order solution)
_FB_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_FB_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_FB_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_FB_B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
_RK4_B = (1 / 6, 1 / 3, 1 / 3, 1 / 6)


class _OdeCore:
    """Stage evaluation shared by step() and simulate()."""

    def __init__(self, params: ModelParams, domain: DomainSpec, r_values):
        self.args = _kernel_args(params, domain, r_values)
        self.nq = 2 + len(r_values)
        self.rhs_calls = 0

    def eval(self, c: np.ndarray):
        self.rhs_calls += 1
        out = kernels.rhs(c, *self.args)
        if not np.all(np.isfinite(out[0])):
            raise SimulationAbort("non-finite right-hand side")
        return out

    def qdot(self, aux: np.ndarray) -> np.ndarray:
        return aux[: self.nq]

    def rkf45_step(self, c, dt, k1, aux1):
        """One trial Fehlberg step from (c, k1).  Returns candidate data."""
        ks = [k1]
        qds = [self.qdot(aux1)]
        for i in range(1, 6):
            ci = c.copy()
            for a, kj in zip(_FB_A[i], ks):
                if a != 0.0:
                    ci += dt * a * kj
            ki, _, _, _, auxi = self.eval(ci)
            ks.append(ki)
            qds.append(self.qdot(auxi))
        c4 = c.copy()
        c5 = c.copy()
        dq = np.zeros(self.nq)
        for b4, b5, ki, qdi in zip(_FB_B4, _FB_B5, ks, qds):
            if b4 != 0.0:
                c4 += dt * b4 * ki
                dq += dt * b4 * qdi
            if b5 != 0.0:
                c5 += dt * b5 * ki
        err = float(np.max(np.abs(c5 - c4)))
        return c4, dq, err

    def rk4_step(self, c, dt, k1, aux1):
        ks = [k1]
        qds = [self.qdot(aux1)]
        for frac in (0.5, 0.5, 1.0):
            ki, _, _, _, auxi = self.eval(c + dt * frac * ks[-1])
            ks.append(ki)
            qds.append(self.qdot(auxi))
        c_new = c.copy()
        dq = np.zeros(self.nq)
        for b, ki, qdi in zip(_RK4_B, ks, qds):
            c_new += dt * b * ki
            dq += dt * b * qdi
        return c_new, dq


def _initial_dt(spec: IntegratorSpec, c: np.ndarray, k1: np.ndarray) -> float:
    if spec.method == "rk4":
        return spec.dt
    d0 = max(float(np.max(np.abs(c))), spec.atol)
    d1 = max(float(np.max(np.abs(k1))), 1e-300)
    return max(DT_MIN, min(1e-3 * spec.t_end, 1e-2 * d0 / d1))


def step(state: OdeState, spec: IntegratorSpec, params: ModelParams,
         domain: DomainSpec, r_values=DEFAULT_R_VALUES) -> OdeState:
    """Advance one accepted step (adaptive mode retries internally).

    Aborts with a stiffness diagnostic once dt underflows DT_MIN.
    """
    core = _OdeCore(params, domain, r_values)
    c = np.ascontiguousarray(state.c.coeffs)
    k1, _, _, _, aux1 = core.eval(c)
    stats = state.stats
    t = state.t
    if spec.method == "rk4":
        dt = min(spec.dt, spec.t_end - t) if spec.t_end > t else spec.dt
        c_new, _ = core.rk4_step(c, dt, k1, aux1)
        stats.accepted += 1
        stats.rhs_calls += core.rhs_calls
        stats.dt_last = dt
        return OdeState(t=t + dt, c=SpectralField(c_new), dt=dt, stats=stats)

    dt = state.dt if state.dt else _initial_dt(spec, c, k1)
    while True:
        dt = min(dt, spec.t_end - t) if spec.t_end > t else dt
        c4, _, err = core.rkf45_step(c, dt, k1, aux1)
        tol = spec.atol + spec.rtol * max(float(np.max(np.abs(c))), float(np.max(np.abs(c4))))
        if err <= tol:
            stats.accepted += 1
            stats.rhs_calls += core.rhs_calls
            dt_next = dt * min(5.0, max(0.2, 0.9 * (tol / max(err, 1e-300)) ** 0.2))
            stats.dt_last = dt
            return OdeState(t=t + dt, c=SpectralField(c4), dt=dt_next, stats=stats)
        stats.rejected += 1
        dt *= max(0.1, 0.9 * (tol / err) ** 0.2)
        if dt < DT_MIN:
            raise SimulationAbort(
                f"step size underflow at t = {t:.6g} (dt = {dt:.3e}): "
                "system too stiff for the explicit integrator at these tolerances"
            )


def _hermite(theta: float, y0, d0, y1, d1, h: float):
    # cubic Hermite on [0, 1] with end values/derivatives
    t2 = theta * theta
    t3 = t2 * theta
    return ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * d0
            + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * d1)


def _weak_residual_max(t, c_dot, u, flux, tol_zero: float) -> float:
    # r_j = (u_t, e_j) + (J, e_j') with J = flux restricted to {u > tol_zero};
    # zero to roundoff for j <= N by Galerkin orthogonality
    ut_grid = t.E @ c_dot
    J = np.where(u > tol_zero, flux, 0.0)
    r = t.ET @ (t.w * ut_grid) + t.ExT @ (t.w * J)
    return float(np.max(np.abs(r)))


def simulate(u0: SpectralField, spec: IntegratorSpec, params: ModelParams,
             domain: DomainSpec, observers=(), r_values=DEFAULT_R_VALUES,
             track_weak_residual: bool = False, tol_zero: float = 1e-7) -> SimulationResult:
    """Integrate to t_end, sampling snapshots and accumulating dissipations.

    The entropy anchor (params.entropy_anchor, when set) is asserted at every
    accepted step: sup|u| >= a aborts the run.  Observers are called as
    observer(t, SpectralField, cum_dict) at each snapshot time.
    """
    snap_times = np.asarray(sorted(spec.snapshot_times), dtype=float)
    if snap_times.size == 0:
        snap_times = np.array([0.0, spec.t_end])
    flags: list[str] = []
    if params.eta == 0.0 and params.mobility_mode == "standard":
        flags.append("eta = 0: mobility unbounded above (outside the discrete existence lemma)")

    core = _OdeCore(params, domain, r_values)
    t_ref = tables(domain)
    anchor = params.entropy_anchor
    c = np.ascontiguousarray(u0.coeffs.astype(float))
    if c.shape[0] != domain.modes + 1:
        raise ValueError("initial coefficients do not match the domain")

    tcur = 0.0
    q = np.zeros(core.nq)
    k1, _, u_grid, flux, aux1 = core.eval(c)

    def check_anchor(aux, tt):
        if anchor is not None and aux[-1] >= anchor:
            raise SimulationAbort(
                f"entropy anchor violated at t = {tt:.6g}: sup|u| = {aux[-1]:.6g} >= a = {anchor:.6g}"
            )

    check_anchor(aux1, 0.0)

    nr = len(r_values)
    node_t = [0.0]
    node_es = [aux1[2 + nr]]
    node_ed = [aux1[3 + nr]]
    node_q = [q.copy()]
    node_maxu = [aux1[-1]]
    node_weak = [] if track_weak_residual else None
    if track_weak_residual:
        node_weak.append(_weak_residual_max(t_ref, k1, u_grid, flux, tol_zero))

    n_snap = snap_times.size
    snap_c = np.empty((n_snap, c.shape[0]))
    snap_q = np.empty((n_snap, core.nq))
    isnap = 0
    # snapshots at t = 0
    while isnap < n_snap and snap_times[isnap] <= 0.0:
        snap_c[isnap] = c
        snap_q[isnap] = q
        isnap += 1

    stats = StepStats()
    dt = _initial_dt(spec, c, k1)
    t_end = spec.t_end
    eps_end = 1e-12 * max(1.0, t_end)

    while tcur < t_end - eps_end:
        dt = min(dt, t_end - tcur)
        if spec.method == "rk4":
            c_new, dq = core.rk4_step(c, dt, k1, aux1)
            accepted, dt_used, dt_next = True, dt, dt
        else:
            c4, dq, err = core.rkf45_step(c, dt, k1, aux1)
            tol = spec.atol + spec.rtol * max(float(np.max(np.abs(c))), float(np.max(np.abs(c4))))
            if err <= tol:
                c_new = c4
                accepted, dt_used = True, dt
                dt_next = dt * min(5.0, max(0.2, 0.9 * (tol / max(err, 1e-300)) ** 0.2))
            else:
                accepted = False
                stats.rejected += 1
                dt *= max(0.1, 0.9 * (tol / err) ** 0.2)
                if dt < DT_MIN:
                    raise SimulationAbort(
                        f"step size underflow at t = {tcur:.6g}: system too stiff "
                        "for the explicit integrator at these tolerances"
                    )
                continue

        t_new = tcur + dt_used
        k1_new, _, u_grid, flux, aux_new = core.eval(c_new)
        check_anchor(aux_new, t_new)
        q_new = q + dq

        # dense output: cubic Hermite for c, and for the cumulative integrals
        # (whose time derivatives are the aux dissipation values)
        while isnap < n_snap and snap_times[isnap] <= t_new + eps_end:
            s = snap_times[isnap]
            theta = min(1.0, max(0.0, (s - tcur) / dt_used))
            snap_c[isnap] = _hermite(theta, c, k1, c_new, k1_new, dt_used)
            snap_q[isnap] = _hermite(theta, q, core.qdot(aux1), q_new,
                                     core.qdot(aux_new), dt_used)
            isnap += 1

        tcur, c, q, k1, aux1 = t_new, c_new, q_new, k1_new, aux_new
        stats.accepted += 1
        stats.dt_last = dt_used
        dt = dt_next
        node_t.append(tcur)
        node_es.append(aux1[2 + nr])
        node_ed.append(aux1[3 + nr])
        node_q.append(q.copy())
        node_maxu.append(aux1[-1])
        if track_weak_residual:
            node_weak.append(_weak_residual_max(t_ref, k1, u_grid, flux, tol_zero))

    # any trailing snapshots at t_end within tolerance
    while isnap < n_snap:
        snap_c[isnap] = c
        snap_q[isnap] = q
        isnap += 1

    stats.rhs_calls = core.rhs_calls
    node_q_arr = np.asarray(node_q)
    nodes = NodeSeries(
        t=np.asarray(node_t),
        energy_surface=np.asarray(node_es),
        energy_delta=np.asarray(node_ed),
        dissipation_cum=node_q_arr[:, 0],
        entropy_dissipation_cum=node_q_arr[:, 1],
        weighted_dissipation_cum={r: node_q_arr[:, 2 + i] for i, r in enumerate(r_values)},
        max_abs_u=np.asarray(node_maxu),
        weak_residual=np.asarray(node_weak) if track_weak_residual else None,
    )
    result = SimulationResult(
        domain=domain,
        params=params,
        spec=spec,
        snapshot_times=snap_times,
        coeffs=snap_c,
        dissipation_cum=snap_q[:, 0],
        entropy_dissipation_cum=snap_q[:, 1],
        weighted_dissipation_cum={r: snap_q[:, 2 + i] for i, r in enumerate(r_values)},
        nodes=nodes,
        stats=stats,
        flags=flags,
    )
    for obs in observers:
        for i, s in enumerate(snap_times):
            obs(s, result.snapshot_field(i),
                {"dissipation_cum": result.dissipation_cum[i],
                 "entropy_dissipation_cum": result.entropy_dissipation_cum[i]})
    return result
