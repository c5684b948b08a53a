"""Time integration of the Lagrangian system with the dissipative freeze.

Node fields ``y, U, H`` and cell fields ``y_xi, U_xi, H_xi`` are stepped
together with classical RK4.  ``V`` is never integrated: it is rebuilt
from ``V_xi = (1 - broken) H_xi``.  The cell equations use the average of
the two end nodes for ``U, P, Q``; with that choice the identity
``U^2 y_xi^2 + U_xi^2 = y_xi V_xi`` is an exact invariant of the
semi-discrete system, so its drift only measures time-stepping error.
``P`` in the cell equations is the exact cell mean of the nodal kernel
sum; then differences of ``y`` and ``U`` across a cell follow the cell
fields exactly, and the Eulerian energy of the image equals ``V``.
``U^2`` in the cell mass and in the ``U_xi`` equation is the mean of the
two nodal squares, which makes the cubic part of the energy flux
telescope exactly; the identity above is indifferent to that choice.

Breaking.  Near a collision ``y_xi`` touches zero tangentially, so a
plain sign test after each step misses it.  Each live cell gets a cubic
Hermite model of ``y_xi`` on the step (values and the exact slopes
``U_xi`` at both ends); when the model's minimum drops below
``eps_break`` the cell is marked broken with ``tau`` at that minimum.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .eulerian import EulerianState, nu_total
from .lagrangian import C_FLOOR, LagrangianState, mask_runs, validate
from .report import DiagnosticsReport
from .scan import cell_kernel_sums, phi1, phi2
from .transform import eul_to_lag, lag_to_eul

log = logging.getLogger(__name__)


class BlowUpError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 2.0
    eps_break: float = 1e-8
    output_times: tuple[float, ...] = ()
    c_floor: float = C_FLOOR
    c2_tol: float = 1e-6

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be positive")
        if self.dt >= self.t_end:
            raise ValueError("dt must be smaller than t_end")
        if not self.eps_break > 0:
            raise ValueError("eps_break must be positive")
        times = tuple(float(t) for t in self.output_times) or (0.0, self.t_end)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("output times must be strictly increasing")
        if times[0] < 0 or times[-1] > self.t_end:
            raise ValueError("output times must lie in [0, t_end]")
        object.__setattr__(self, "output_times", times)


@dataclass(frozen=True, eq=False)
class PQField:
    P: np.ndarray
    Q: np.ndarray

    def bound_residual(self) -> float:
        """``max(|Q| - P)``; nonpositive when ``|Q| <= P`` holds."""
        return float(np.max(np.abs(self.Q) - self.P))


def _pq_arrays(y, U, y_xi, V_xi, dxi, with_cell_mean=False):
    # roundoff can push neighbouring nodes a hair out of order
    ys = np.maximum.accumulate(y)
    W = 0.5 * (U[1:] ** 2 + U[:-1] ** 2)
    mass = (W * y_xi + V_xi) * dxi
    left, right = cell_kernel_sums(ys, mass)
    P, Q = 0.25 * (left + right), 0.25 * (right - left)
    if not with_cell_mean:
        return P, Q
    # exact mean of P over [y_k, y_k+1] for the same cell density
    h = np.diff(ys)
    P_bar = 0.25 * ((left[:-1] + right[1:]) * phi1(h) + 2.0 * mass * phi2(h))
    return P, Q, P_bar


def compute_PQ(state: LagrangianState, mono_tol: float = 1e-8) -> PQField:
    """Nonlocal ``P`` and ``Q`` at the nodes in O(N).

    Cell ``k`` carries ``(U^2 y_xi + V_xi) dxi`` spread evenly over
    ``[y_k, y_{k+1}]``; a collapsed cell is a point mass.
    """
    y = state.y
    span = 1.0 + float(y[-1] - y[0])
    if np.min(np.diff(y)) < -mono_tol * span:
        raise ValueError("y decreases; P and Q are undefined")
    P, Q = _pq_arrays(y, state.U, state.y_xi, state.V_xi, state.dxi)
    return PQField(P, Q)


@dataclass(frozen=True, eq=False)
class Rates:
    y: np.ndarray
    U: np.ndarray
    H: np.ndarray
    y_xi: np.ndarray
    U_xi: np.ndarray
    H_xi: np.ndarray


def _rates(y, U, H, y_xi, U_xi, H_xi, live, dxi):
    V_xi = np.where(live, H_xi, 0.0)
    P, Q, Pc = _pq_arrays(y, U, y_xi, V_xi, dxi, with_cell_mean=True)
    Uc = 0.5 * (U[1:] + U[:-1])
    W = 0.5 * (U[1:] ** 2 + U[:-1] ** 2)
    Qc = 0.5 * (Q[1:] + Q[:-1])
    dy_xi = np.where(live, U_xi, 0.0)
    dU_xi = np.where(live, 0.5 * (V_xi + (W - 2.0 * Pc) * y_xi), 0.0)
    dH_xi = np.where(live, (2.0 * Uc**2 + W - 2.0 * Pc) * U_xi - 2.0 * Qc * Uc * y_xi, 0.0)
    return U, -Q, U**3 - 2.0 * P * U, dy_xi, dU_xi, dH_xi


def rhs(state: LagrangianState) -> Rates:
    """Time derivatives of the evolved fields; broken cells are frozen."""
    return Rates(*_rates(state.y, state.U, state.H, state.y_xi, state.U_xi, state.H_xi,
                         ~state.broken, state.dxi))


def _hermite_min(a0, a1, d0, d1):
    """Minimum over ``s in [0, 1]`` of the cubic Hermite interpolant.

    ``a`` are end values, ``d`` end slopes already scaled by the step.
    Returns ``(min value, argmin s)`` per cell.
    """
    # p(s) = a0 + d0 s + c2 s^2 + c3 s^3
    c2 = 3.0 * (a1 - a0) - 2.0 * d0 - d1
    c3 = 2.0 * (a0 - a1) + d0 + d1
    best = np.where(a1 < a0, a1, a0)
    arg = np.where(a1 < a0, 1.0, 0.0)
    # critical points of p: d0 + 2 c2 s + 3 c3 s^2 = 0
    A, B, C = 3.0 * c3, 2.0 * c2, d0
    with np.errstate(invalid="ignore", divide="ignore"):
        disc = np.sqrt(np.maximum(B * B - 4.0 * A * C, 0.0))
        lin = np.abs(A) < 1e-14 * (np.abs(B) + np.abs(C) + 1e-300)
        roots = [
            np.where(lin, -C / np.where(B == 0, np.inf, B), (-B - disc) / (2.0 * A)),
            np.where(lin, np.nan, (-B + disc) / (2.0 * A)),
        ]
    for s in roots:
        ok = np.isfinite(s) & (s > 0.0) & (s < 1.0)
        s_ok = np.where(ok, s, 0.0)
        val = a0 + s_ok * (d0 + s_ok * (c2 + s_ok * c3))
        better = ok & (val < best)
        best = np.where(better, val, best)
        arg = np.where(better, s_ok, arg)
    return best, arg


def _rebuild_V(H_xi, broken, dxi):
    return np.concatenate(([0.0], np.cumsum(np.where(broken, 0.0, H_xi) * dxi)))


def step(state: LagrangianState, dt: float, eps_break: float = 1e-8,
         scale: np.ndarray | None = None) -> tuple[LagrangianState, list[tuple[float, int]]]:
    """One RK4 step followed by breaking detection.

    ``scale`` is the per-cell reference for the breaking threshold
    (default ``y_xi + H_xi`` of the incoming state).  Returns the new state
    and the ``(tau, cell)`` pairs of cells that broke during the step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    live = ~state.broken
    dxi = state.dxi
    x0 = (state.y, state.U, state.H, state.y_xi, state.U_xi, state.H_xi)

    # non-finite values are reported below as a blow-up, not as warnings
    with np.errstate(invalid="ignore", over="ignore"):
        k1 = _rates(*x0, live, dxi)
        x1 = tuple(a + 0.5 * dt * k for a, k in zip(x0, k1))
        k2 = _rates(*x1, live, dxi)
        x2 = tuple(a + 0.5 * dt * k for a, k in zip(x0, k2))
        k3 = _rates(*x2, live, dxi)
        x3 = tuple(a + dt * k for a, k in zip(x0, k3))
        k4 = _rates(*x3, live, dxi)
        y, U, H, y_xi, U_xi, H_xi = (
            a + dt / 6.0 * (p + 2.0 * q + 2.0 * r + s)
            for a, p, q, r, s in zip(x0, k1, k2, k3, k4))
    t1 = state.t + dt

    for name, arr in zip(("y", "U", "H", "y_xi", "U_xi", "H_xi"), (y, U, H, y_xi, U_xi, H_xi)):
        if not np.all(np.isfinite(arr)):
            raise BlowUpError(f"blow-up: non-finite {name} at t={t1:.6g}")

    if scale is None:
        scale = state.y_xi + state.H_xi
    thr = eps_break * scale
    m, s = _hermite_min(state.y_xi, y_xi, dt * state.U_xi, dt * U_xi)
    newly = live & ((m <= thr) | (y_xi <= thr))

    events: list[tuple[float, int]] = []
    tau = state.tau.copy()
    broken = state.broken.copy()
    if np.any(newly):
        idx = np.flatnonzero(newly)
        # a monotone crossing is located linearly, a tangential touch at the minimum
        a0, a1 = state.y_xi[idx], y_xi[idx]
        crossing = (a0 > thr[idx]) & (a1 <= thr[idx])
        with np.errstate(invalid="ignore", divide="ignore"):
            s_lin = np.clip((a0 - thr[idx]) / (a0 - a1), 0.0, 1.0)
        tau[idx] = state.t + np.where(crossing & (m[idx] >= a1), s_lin, s[idx]) * dt
        broken[idx] = True
        y_xi[idx] = 0.0
        U_xi[idx] = 0.0
        events = [(float(tau[i]), int(i)) for i in idx]
        # broken cells carry no mass, so P and Q agree along a collapsed run;
        # snapping its nodes together once keeps them together afterwards
        for a, b in mask_runs(broken):
            if newly[a:b].any():
                y[a:b + 1] = y[a:b + 1].mean()
                U[a:b + 1] = U[a:b + 1].mean()

    V = _rebuild_V(H_xi, broken, dxi)
    V_xi = np.where(broken, 0.0, H_xi)
    new = LagrangianState(xi=state.xi, y=y, U=U, V=V, H=H, y_xi=y_xi, U_xi=U_xi,
                          V_xi=V_xi, H_xi=H_xi, tau=tau, broken=broken, t=t1)
    return new, events


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    eulerian: EulerianState
    lagrangian: LagrangianState
    pq: PQField
    report: DiagnosticsReport

    def u_on(self, x) -> np.ndarray:
        """``u`` at arbitrary points, zero off the support."""
        e = self.eulerian
        return np.interp(np.asarray(x, dtype=float), e.x, e.u, left=0.0, right=0.0)


@dataclass(eq=False)
class Trajectory:
    config: SolverConfig
    initial: EulerianState
    snapshots: list[Snapshot] = field(default_factory=list)
    events: list[tuple[float, int]] = field(default_factory=list)
    # per-step history: time, ac energy V(+inf), total H(+inf)
    step_t: list[float] = field(default_factory=list)
    step_energy: list[float] = field(default_factory=list)
    step_total: list[float] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def at(self, t: float) -> Snapshot:
        for s in self.snapshots:
            if abs(s.t - t) <= 1e-12 * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t}")


def snapshot(state: LagrangianState, c_floor: float = C_FLOOR,
             c2_tol: float = 1e-6) -> Snapshot:
    eul = lag_to_eul(state)
    return Snapshot(t=state.t, eulerian=eul, lagrangian=state, pq=compute_PQ(state),
                    report=validate(state, tol=c2_tol, c=c_floor))


def solve(initial: EulerianState | LagrangianState, config: SolverConfig) -> Trajectory:
    """Integrate from ``initial`` to ``config.t_end``.

    Output times are hit exactly by shortening the step that would pass
    them; snapshots carry the Eulerian image on the node positions.
    """
    if isinstance(initial, EulerianState):
        initial.validate()
        state = eul_to_lag(initial)
        eul0 = initial
    else:
        state = initial
        eul0 = lag_to_eul(initial)
    traj = Trajectory(config=config, initial=eul0)
    scale = state.y_xi + state.H_xi
    pending = [t for t in config.output_times if t >= state.t - 1e-12]
    # step times are anchor + k dt, re-anchored at every output time, so
    # no roundoff accumulates and outputs are hit exactly
    anchor, k = state.t, 0

    def record(st):
        traj.step_t.append(st.t)
        traj.step_energy.append(float(st.V[-1]))
        traj.step_total.append(float(st.H[-1]))

    record(state)
    while pending and pending[0] <= state.t + 1e-12:
        traj.snapshots.append(snapshot(state, config.c_floor, config.c2_tol))
        pending.pop(0)
    n_steps = 0
    while state.t < config.t_end - 1e-12:
        target = min(anchor + (k + 1) * config.dt, config.t_end)
        k += 1
        if pending and target >= pending[0] - 1e-9 * config.dt:
            target = pending[0]
            anchor, k = target, 0
        h = target - state.t
        state, events = step(state, h, config.eps_break, scale)
        # land exactly on the grid of output times
        state = state.replace(t=target)
        n_steps += 1
        record(state)
        if events:
            traj.events.extend(events)
            log.debug("t=%.6f: %d cells broke", state.t, len(events))
        if pending and state.t == pending[0]:
            traj.snapshots.append(snapshot(state, config.c_floor, config.c2_tol))
            log.info("snapshot t=%.6g, broken cells %d", state.t, int(state.broken.sum()))
            pending.pop(0)
    log.info("solve finished: %d steps, %d breaking events", n_steps, len(traj.events))
    return traj


def breaking_profile(traj: Trajectory) -> dict[str, np.ndarray]:
    """Per-cell breaking times of the last snapshot (``inf`` where never broken)."""
    last = traj.snapshots[-1].lagrangian
    mid = 0.5 * (last.xi[1:] + last.xi[:-1])
    return {"xi": mid, "tau": last.tau.copy()}


def nu_history(traj: Trajectory) -> np.ndarray:
    return np.array([nu_total(s.eulerian) for s in traj.snapshots])
