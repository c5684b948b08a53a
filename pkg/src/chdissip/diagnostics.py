"""Checks of a computed trajectory against the defining properties of a
dissipative solution and the Lagrangian invariants.

Every check returns a :class:`Check`; ``run_diagnostics`` collects the
full set into one report.  All checks read the trajectory only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eulerian import EulerianState, h1_norm, nu_total
from .evolution import SolverConfig, Trajectory, solve
from .report import Check, DiagnosticsReport
from .transform import lag_to_eul


@dataclass(frozen=True)
class Thresholds:
    energy_step: float = 1e-6
    nu_rel: float = 1e-4
    c2: float = 1e-6
    lipschitz_margin: float = 0.1
    lipschitz_t_min: float = 0.1
    holder_time: float | None = None
    consistency: float = 1e-6
    pq_rel: float = 1e-12


def _loc(t, **kw):
    return {"t": float(t), **{k: float(v) for k, v in kw.items()}}


def _u0_norm(traj: Trajectory) -> float:
    return h1_norm(traj.initial)


def check_one_sided_lipschitz(traj: Trajectory, D_bound: float | None = None,
                              margin: float = 0.1, t_min: float = 0.1) -> Check:
    """Forward-difference slopes against ``2/t + sqrt(2)||u0||`` and a run-level ``D``.

    The run-level ``D`` defaults to the Riccati ceiling
    ``max(sup u0_x, 2 sqrt(nu(R)))``.  The residual is the largest excess
    over either bound, so a pass means a nonpositive residual.
    """
    norm0 = _u0_norm(traj)
    if D_bound is None:
        D_bound = max(traj.initial.max_slope(), 2.0 * math.sqrt(nu_total(traj.initial)))
    worst, where = -math.inf, {}
    for s in traj.snapshots:
        e = s.eulerian
        if e.x.size < 2:
            continue
        slopes = e.slope
        k = int(np.argmax(slopes))
        excess = slopes[k] - (D_bound + margin)
        if s.t >= t_min:
            excess = max(excess, slopes[k] - (2.0 / s.t + math.sqrt(2.0) * norm0 + margin))
        if excess > worst:
            worst, where = excess, _loc(s.t, x=e.x[k])
    if not traj.snapshots:
        worst = 0.0
    return Check.upper("one_sided_lipschitz", worst, 0.0, where, D_bound=D_bound,
                       u0_h1=norm0, margin=margin)


def check_riccati_alpha(traj: Trajectory, margin: float = 0.1) -> Check:
    """``alpha = U_xi / y_xi`` on live cells stays under ``max(alpha(0), 2 sqrt(C))``."""
    C = nu_total(traj.initial)
    alphas = []
    for s in traj.snapshots:
        L = s.lagrangian
        live = (~L.broken) & (L.y_xi > 0)
        a = np.where(live, L.U_xi / np.where(live, L.y_xi, 1.0), -np.inf)
        alphas.append((s.t, a, L))
    if not alphas:
        return Check.upper("riccati_alpha", 0.0, 0.0)
    a0 = float(np.max(alphas[0][1])) if np.any(np.isfinite(alphas[0][1])) else 0.0
    ceiling = max(a0, 2.0 * math.sqrt(C)) + margin
    worst, where = -math.inf, {}
    for t, a, L in alphas:
        k = int(np.argmax(a))
        if a[k] - ceiling > worst:
            worst, where = a[k] - ceiling, _loc(t, xi=0.5 * (L.xi[k] + L.xi[k + 1]))
    return Check.upper("riccati_alpha", worst, 0.0, where, ceiling=ceiling)


def check_energy(traj: Trajectory, step_tol: float = 1e-6, nu_rel: float = 1e-4) -> list[Check]:
    """Energy never increases by more than ``step_tol`` per step; ``nu(R)`` is constant."""
    if len(traj.step_energy) > 1:
        e = np.asarray(traj.step_energy)
        t = np.asarray(traj.step_t)
    else:
        e = np.array([float(np.sum(s.eulerian.cell_energy())) for s in traj.snapshots])
        t = traj.times
    if e.size > 1:
        d = np.diff(e)
        k = int(np.argmax(d))
        mono = Check.upper("energy_monotone", d[k], step_tol, _loc(t[k + 1]))
    else:
        mono = Check.upper("energy_monotone", 0.0, step_tol)

    nu = np.array([nu_total(s.eulerian) for s in traj.snapshots])
    nu0 = nu_total(traj.initial)
    if nu.size and nu0 > 0:
        rel = np.abs(nu - nu0) / nu0
        k = int(np.argmax(rel))
        cons = Check.upper("nu_conservation", rel[k], nu_rel, _loc(traj.snapshots[k].t), nu0=nu0)
    else:
        cons = Check.upper("nu_conservation", float(np.max(np.abs(nu), initial=0.0)), nu_rel)
    return [mono, cons]


def check_c2_identity(traj: Trajectory, tol: float = 1e-6) -> Check:
    worst, where = 0.0, {}
    for s in traj.snapshots:
        L = s.lagrangian
        r = np.where(L.broken, 0.0, L.c2_residual())
        if r.size and r.max() > worst:
            k = int(np.argmax(r))
            worst, where = float(r[k]), _loc(s.t, xi=0.5 * (L.xi[k] + L.xi[k + 1]))
    return Check.upper("c2_identity", worst, tol, where)


def check_broken_monotone(traj: Trajectory) -> Check:
    """Once broken, forever broken; ``tau`` never moves once set."""
    bad, where = 0, {}
    for a, b in zip(traj.snapshots, traj.snapshots[1:]):
        A, B = a.lagrangian, b.lagrangian
        if A.xi.shape != B.xi.shape or not np.array_equal(A.xi, B.xi):
            bad += 1
            where = _loc(b.t)
            continue
        lost = A.broken & ~B.broken
        moved = A.broken & B.broken & (A.tau != B.tau)
        n = int(lost.sum() + moved.sum())
        if n:
            bad += n
            k = int(np.flatnonzero(lost | moved)[0])
            where = _loc(b.t, xi=A.xi[k])
    return Check.upper("broken_monotone", bad, 0, where)


def check_pq_bound(traj: Trajectory, rel: float = 1e-12) -> Check:
    """``0 <= P`` and ``|Q| <= P`` at every node of every snapshot."""
    worst, where, scale = -math.inf, {}, 0.0
    for s in traj.snapshots:
        P, Q = s.pq.P, s.pq.Q
        scale = max(scale, float(np.max(P, initial=0.0)))
        r = np.maximum(np.abs(Q) - P, -P)
        k = int(np.argmax(r))
        if r[k] > worst:
            worst, where = float(r[k]), _loc(s.t, xi=s.lagrangian.xi[k])
    if not traj.snapshots:
        worst = 0.0
    return Check.upper("pq_bound", worst, rel * (1.0 + scale), where)


def check_lagrangian_membership(traj: Trajectory) -> Check:
    """Every snapshot passed the membership validation attached by the solver."""
    failing = [s for s in traj.snapshots if not s.report.passed]
    where = {}
    names = []
    if failing:
        where = _loc(failing[0].t)
        names = [c.name for c in failing[0].report.failures()]
    return Check.upper("lagrangian_membership", len(failing), 0, where, first_failures=",".join(names))


def check_holder_half(traj: Trajectory, time_const: float | None = None) -> list[Check]:
    """Discrete Hoelder-1/2 quotients in space and time.

    In space the bound ``|u(x) - u(z)|^2 <= |x - z| int u_x^2`` is exact, so
    the quotient is compared with ``sqrt(nu(R))``.  In time there is no
    sharp constant; the default ``2 (1 + nu(R))`` is a sanity ceiling.
    """
    nu0 = nu_total(traj.initial)
    bound_x = math.sqrt(max(nu0, 0.0)) * (1.0 + 1e-9) + 1e-12
    worst_x, where_x = 0.0, {}
    for s in traj.snapshots:
        e = s.eulerian
        q = np.abs(np.diff(e.u)) / np.sqrt(e.h)
        if q.size and q.max() > worst_x:
            k = int(np.argmax(q))
            worst_x, where_x = float(q[k]), _loc(s.t, x=e.x[k])
    cx = Check.upper("holder_half_x", worst_x, bound_x, where_x)

    if time_const is None:
        time_const = 2.0 * (1.0 + nu0)
    worst_t, where_t = 0.0, {}
    for a, b in zip(traj.snapshots, traj.snapshots[1:]):
        grid = np.union1d(a.eulerian.x, b.eulerian.x)
        d = np.max(np.abs(a.u_on(grid) - b.u_on(grid)))
        q = d / math.sqrt(b.t - a.t)
        if q > worst_t:
            worst_t, where_t = float(q), _loc(b.t)
    ct = Check.upper("holder_half_t", worst_t, time_const, where_t)
    return [cx, ct]


def check_tv_p_along_characteristic(traj: Trajectory, node: int | None = None,
                                    bound: float | None = None) -> Check:
    """Total variation of ``P(t, xi)`` over the snapshot times at one node.

    The default node is the one closest to the centre of the energy
    distribution at ``t = 0``.  ``info['jumps']`` counts increments larger
    than a tenth of the total variation.
    """
    if not traj.snapshots:
        return Check.upper("tv_p_characteristic", 0.0, math.inf)
    L0 = traj.snapshots[0].lagrangian
    if node is None:
        H = L0.H
        node = int(np.argmin(np.abs(H - 0.5 * H[-1]))) if H[-1] > 0 else L0.xi.size // 2
    P = np.array([s.pq.P[node] for s in traj.snapshots])
    inc = np.abs(np.diff(P))
    tv = float(inc.sum())
    if bound is None:
        bound = 2.0 * nu_total(traj.initial) + 1e-12
    jumps = int(np.sum(inc > 0.1 * tv)) if tv > 0 else 0
    return Check.upper("tv_p_characteristic", tv, bound, {"xi": float(L0.xi[node])},
                       jumps=jumps, node=node)


def check_p_lipschitz(traj: Trajectory) -> Check:
    """Per-snapshot continuity of ``p``: ``|dP| <= max(P) dy`` between nodes (``|p_x| <= p``)."""
    worst, where = -math.inf, {}
    for s in traj.snapshots:
        y = s.lagrangian.y
        P = s.pq.P
        r = np.abs(np.diff(P)) - np.max(P) * np.abs(np.diff(y))
        k = int(np.argmax(r))
        if r[k] > worst:
            worst, where = float(r[k]), _loc(s.t, x=y[k])
    if not traj.snapshots:
        worst = 0.0
    return Check.upper("p_lipschitz", worst, 1e-12, where)


def check_snapshot_consistency(traj: Trajectory, tol: float = 1e-6) -> Check:
    """The stored Eulerian image agrees with the map M applied to the stored Lagrangian state."""
    worst, where = 0.0, {}
    for s in traj.snapshots:
        ref = lag_to_eul(s.lagrangian)
        e = s.eulerian
        du = float(np.max(np.abs(np.interp(e.x, ref.x, ref.u, left=0.0, right=0.0) - e.u)))
        dnu = abs(nu_total(ref) - nu_total(e))
        r = max(du, dnu)
        if r > worst:
            worst, where = r, _loc(s.t)
    return Check.upper("snapshot_consistency", worst, tol, where)


def run_diagnostics(traj: Trajectory, th: Thresholds = Thresholds()) -> DiagnosticsReport:
    rep = DiagnosticsReport()
    rep.add(check_one_sided_lipschitz(traj, margin=th.lipschitz_margin, t_min=th.lipschitz_t_min))
    rep.add(check_riccati_alpha(traj, margin=th.lipschitz_margin))
    for c in check_energy(traj, th.energy_step, th.nu_rel):
        rep.add(c)
    rep.add(check_c2_identity(traj, th.c2))
    rep.add(check_broken_monotone(traj))
    rep.add(check_pq_bound(traj, th.pq_rel))
    rep.add(check_lagrangian_membership(traj))
    for c in check_holder_half(traj, th.holder_time):
        rep.add(c)
    rep.add(check_tv_p_along_characteristic(traj))
    rep.add(check_p_lipschitz(traj))
    rep.add(check_snapshot_consistency(traj, th.consistency))
    return rep


def min_positive_tau(traj: Trajectory) -> float:
    """Earliest breaking time after ``t = 0`` (initial plateaus excluded)."""
    taus = [t for t, _ in traj.events if t > 0]
    return min(taus) if taus else math.inf


def check_nu_independence(u0: EulerianState, atoms, config: SolverConfig,
                          tol: float = 1e-3) -> Check:
    """Solve with and without extra atoms and compare ``u`` snapshot by snapshot.

    The two runs differ only through the singular part of the initial
    measure; ``u`` must not notice.  ``info`` carries the first positive
    breaking time of both runs.
    """
    atoms = tuple(tuple(a) for a in atoms)
    a = solve(u0, config)
    b = a if not atoms else solve(u0.with_atoms(tuple(u0.atoms) + atoms), config)
    worst, where = 0.0, {}
    for sa, sb in zip(a.snapshots, b.snapshots):
        grid = np.union1d(sa.eulerian.x, sb.eulerian.x)
        d = float(np.max(np.abs(sa.u_on(grid) - sb.u_on(grid))))
        if d > worst:
            worst, where = d, _loc(sa.t)
    return Check.upper("nu_independence", worst, tol, where,
                       tau_a=min_positive_tau(a), tau_b=min_positive_tau(b))
