"""Maps between Eulerian pairs ``(u, nu)`` and Lagrangian quadruples.

``eul_to_lag`` inverts ``x -> x + nu((-inf, x))``.  With the cell rule of
:mod:`chdissip.eulerian` that map is piecewise linear between grid nodes
and jumps by ``m`` at an atom of mass ``m``; the jump becomes a plateau of
``y`` (a run of collapsed cells) in label space.  Labels inside a plateau
get ``y = x_atom``, matching the sup in the definition of ``y``:
``y(xi) = x_atom`` for ``x_atom + nu((-inf, x_atom)) <= xi <= x_atom +
nu((-inf, x_atom])``.
"""

from __future__ import annotations

import math

import numpy as np

from .eulerian import EulerianError, EulerianState
from .lagrangian import (LagrangianError, LagrangianState, RelabelFunction, cell_slopes,
                         impose_c2, is_relabeling, mask_runs, refine_labels)

MAX_ATOM_CELLS = 256


def _with_atom_nodes(state: EulerianState) -> tuple[np.ndarray, np.ndarray, list[int], list[float]]:
    """Grid with every atom position inserted as a node."""
    x, u = state.x, state.u
    pos = [p for p, _ in state.atoms]
    if pos and (pos[0] < x[0] or pos[-1] > x[-1]):
        raise EulerianError("atom outside the x grid")
    # an atom within roundoff of a node sits on that node; a separate node
    # would give a label cell of zero width
    snap = 1e-12 * (x[-1] - x[0])
    pos = [float(x[np.argmin(np.abs(x - p))]) if np.min(np.abs(x - p)) <= snap else p for p in pos]
    extra = np.setdiff1d(np.asarray(pos, dtype=float), x)
    if extra.size:
        xa = np.union1d(x, extra)
        u = np.interp(xa, x, u)
        x = xa
    idx = [int(np.searchsorted(x, p)) for p in pos]
    return x, u, idx, [m for _, m in state.atoms]


def _atom_cells(mass: float, typical: float, n_cells: int | None) -> int:
    if n_cells is not None:
        return max(1, int(n_cells))
    return int(min(MAX_ATOM_CELLS, max(2, math.ceil(mass / typical))))


def _label_map(state: EulerianState, atom_cells: int | None = None):
    """Node-level description of ``x -> x + G(x)``.

    Returns per Lagrangian node xi, y, U, V and a block id (-1 off atoms),
    the total mass, and per Lagrangian cell its Eulerian ``(h, e, du)``
    (all zero on plateau cells).
    """
    x, u, atom_idx, masses = _with_atom_nodes(state)
    h = np.diff(x)
    du = np.diff(u)
    e = ((0.5 * (u[1:] + u[:-1])) ** 2 + (du / h) ** 2) * h
    F = np.concatenate(([0.0], np.cumsum(e)))
    typical = float(np.median(h + e))

    xi, y, U, V, block = [], [], [], [], []
    cells = []
    mass_left = 0.0
    atom_at = dict(zip(atom_idx, range(len(masses))))
    for i in range(x.size):
        base = x[i] + F[i] + mass_left
        if i in atom_at:
            b = atom_at[i]
            m = masses[b]
            k = _atom_cells(m, typical, atom_cells)
            for j in range(k + 1):
                xi.append(base + m * j / k)
                y.append(x[i]); U.append(u[i]); V.append(F[i]); block.append(b)
            cells.extend([(0.0, 0.0, 0.0)] * k)
            mass_left += m
        else:
            xi.append(base); y.append(x[i]); U.append(u[i]); V.append(F[i]); block.append(-1)
        if i < h.size:
            cells.append((h[i], e[i], du[i]))
    return (np.array(xi), np.array(y), np.array(U), np.array(V), np.array(block),
            mass_left + F[-1], np.array(cells).T)


def eul_to_lag(state: EulerianState, atom_cells: int | None = None) -> LagrangianState:
    """The map L into the normalized set (``y + H = xi``).

    Off atoms a cell spans ``dxi = h + e`` (``e`` its ac energy), so
    ``y_xi = h/dxi`` and ``H_xi = V_xi = e/dxi``; with the midpoint cell rule
    the identity ``U^2 y_xi^2 + U_xi^2 = y_xi V_xi`` holds exactly.  The
    cell fields are formed from ``h`` and ``e`` rather than from node
    differences, which would lose digits in very short cells.
    """
    xi, y, U, V, block, _, (h, e, du) = _label_map(state, atom_cells)
    H = xi - y
    plateau = (block[:-1] >= 0) & (block[:-1] == block[1:])
    d = np.where(plateau, 1.0, h + e)
    y_xi = np.where(plateau, 0.0, h / d)
    U_xi = np.where(plateau, 0.0, du / d)
    V_xi = np.where(plateau, 0.0, e / d)
    H_xi = np.where(plateau, 1.0, V_xi)
    return LagrangianState(xi=xi, y=y, U=U, V=V, H=H, y_xi=y_xi, U_xi=U_xi, V_xi=V_xi,
                           H_xi=H_xi, tau=np.where(plateau, 0.0, np.inf), broken=plateau, t=0.0)


def eul_to_lag_with_label(state: EulerianState, g: RelabelFunction,
                          atom_cells: int | None = None) -> LagrangianState:
    """The map L_g: same sup construction, but at the levels ``g(xi)``.

    Preimages under ``g`` of the level nodes are added to the grid, so atoms
    stay resolved as collapsed cells and every cell lies inside one
    Eulerian cell or one plateau, where its fields are the Eulerian cell
    values times the slope of ``g``.
    """
    if not is_relabeling(g):
        raise LagrangianError("not a relabeling function")
    lxi, ly, lU, lV, block, total, (h, e, du) = _label_map(state, atom_cells)
    x_all, u_all, _, _ = _with_atom_nodes(state)

    f = refine_labels(g, g.inverse(lxi).f)
    labels, levels = f.xi, f.f

    # sup{x : x + nu((-inf, x)) < level}; flat on plateaus by construction
    y = np.interp(levels, lxi, ly)
    y = np.where(levels < lxi[0], levels - (lxi[0] - ly[0]), y)
    y = np.where(levels > lxi[-1], levels - total, y)
    U = np.interp(y, x_all, u_all, left=0.0, right=0.0)
    Fx = np.concatenate(([0.0], np.cumsum(e[h > 0])))
    V = np.interp(y, x_all, Fx)
    H = levels - y

    mid = g(0.5 * (labels[1:] + labels[:-1]))
    slope = cell_slopes(g, 0.5 * (labels[1:] + labels[:-1]))
    k = np.searchsorted(lxi, mid) - 1
    inside = (k >= 0) & (k < lxi.size - 1)
    kc = np.clip(k, 0, lxi.size - 2)
    plateau = inside & (block[kc] >= 0) & (block[kc] == block[kc + 1])
    d = np.where(plateau | ~inside, 1.0, h[kc] + e[kc])
    y_xi = np.where(inside, np.where(plateau, 0.0, h[kc] / d), 1.0) * slope
    U_xi = np.where(inside & ~plateau, du[kc] / d, 0.0) * slope
    V_xi = np.where(inside & ~plateau, e[kc] / d, 0.0) * slope
    H_xi = np.where(inside, np.where(plateau, 1.0, e[kc] / d), 0.0) * slope
    return impose_c2(LagrangianState(xi=labels, y=y, U=U, V=V, H=H, y_xi=y_xi, U_xi=U_xi,
                                     V_xi=V_xi, H_xi=H_xi, tau=np.where(plateau, 0.0, np.inf),
                                     broken=plateau, t=0.0))


def collapsed_cells(state: LagrangianState, plateau_tol: float = 1e-9) -> np.ndarray:
    """Cells whose label interval maps to a single point."""
    yx = state.y_xi
    thr = plateau_tol * float(np.median(yx))
    return state.broken | (yx <= thr)


def lag_to_eul(state: LagrangianState, x_grid=None, plateau_tol: float = 1e-9,
               mono_tol: float = 1e-8) -> EulerianState:
    """The map M: ``u(y(xi)) = U(xi)`` and ``nu = y_# (H_xi dxi)``.

    Runs of collapsed cells become atoms carrying ``int (H_xi - V_xi)`` over
    the run; the rest of ``nu`` is the ac part implied by ``u``.  Without
    ``x_grid`` the output grid is the node positions with each run merged
    into one point.
    """
    y = state.y
    span = 1.0 + float(y[-1] - y[0])
    if np.min(np.diff(y)) < -mono_tol * span:
        k = int(np.argmin(np.diff(y)))
        raise LagrangianError(f"invalid Lagrangian state: y decreases at xi={state.xi[k]:.6g}")

    collapsed = collapsed_cells(state, plateau_tol)
    keep = np.ones(y.size, dtype=bool)
    pos = y.copy()
    vals = state.U.copy()
    atoms = []
    sing = (state.H_xi - state.V_xi) * state.dxi
    for a, b in mask_runs(collapsed):
        # nodes a..b inclusive share one position
        mean_y = float(np.mean(y[a:b + 1]))
        pos[a] = mean_y
        vals[a] = float(np.mean(state.U[a:b + 1]))
        keep[a + 1:b + 1] = False
        mass = float(np.sum(sing[a:b]))
        if mass > 0:
            atoms.append((mean_y, mass))
    pos, vals = pos[keep], vals[keep]
    # roundoff can leave neighbours equal or a hair out of order
    pos = np.maximum.accumulate(pos)
    uniq, start = np.unique(pos, return_index=True)
    if uniq.size != pos.size:
        vals = np.add.reduceat(vals, start) / np.diff(np.append(start, pos.size))
        pos = uniq
    if x_grid is None:
        return EulerianState(pos, vals, tuple(atoms))
    x_grid = np.asarray(x_grid, dtype=float)
    return EulerianState(x_grid, np.interp(x_grid, pos, vals, left=0.0, right=0.0), tuple(atoms))
