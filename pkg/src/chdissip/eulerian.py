"""Eulerian data ``(u, nu)`` and the fields derived from it.

``u`` is piecewise linear between the nodes of ``x`` and zero outside
them.  ``nu`` is never stored in full: its absolutely continuous part is
always ``(u^2 + u_x^2) dx`` and only the point masses (``atoms``) are
explicit.

Cell quadrature: on a cell of width ``h`` with end values ``a, b`` the
squared height is taken at the midpoint of the interpolant,
``((a+b)/2)^2``, and the squared slope ``((b-a)/h)^2`` is exact.  The same
rule is used for ``F`` and for ``p``, so that the change to Lagrangian
variables satisfies ``U^2 y_xi^2 + U_xi^2 = y_xi V_xi`` exactly cell by
cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scan import cell_kernel_sums

DECAY_TOL = 1e-8


class EulerianError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EulerianState:
    x: np.ndarray
    u: np.ndarray
    atoms: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        u = np.array(self.u, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise EulerianError("x grid needs at least two nodes")
        if u.shape != x.shape:
            raise EulerianError(f"u has shape {u.shape}, x has {x.shape}")
        if not np.all(np.isfinite(x)) or not np.all(np.diff(x) > 0):
            raise EulerianError("x grid must be finite and strictly increasing")
        if not np.all(np.isfinite(u)):
            raise EulerianError("u must be finite at every node")
        atoms = []
        for a in self.atoms:
            pos, mass = float(a[0]), float(a[1])
            if not np.isfinite(pos) or not np.isfinite(mass) or mass <= 0:
                raise EulerianError(f"invalid atom {a!r}: need finite position and mass > 0")
            atoms.append((pos, mass))
        atoms.sort()
        x.flags.writeable = False
        u.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "atoms", tuple(atoms))

    # -- cell quantities -------------------------------------------------
    @property
    def h(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def slope(self) -> np.ndarray:
        return np.diff(self.u) / self.h

    @property
    def u_mid(self) -> np.ndarray:
        return 0.5 * (self.u[1:] + self.u[:-1])

    def cell_energy(self) -> np.ndarray:
        """``int (u^2 + u_x^2) dx`` over each cell."""
        return (self.u_mid**2 + self.slope**2) * self.h

    def cell_pressure_mass(self) -> np.ndarray:
        """``int (2u^2 + u_x^2) dx`` over each cell."""
        return (2.0 * self.u_mid**2 + self.slope**2) * self.h

    def F_nodes(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.cell_energy())))

    def max_slope(self) -> float:
        """Largest forward-difference slope, the discrete stand-in for sup u_x."""
        return float(np.max(self.slope))

    def validate(self, decay_tol: float = DECAY_TOL, slope_bound: float | None = None) -> None:
        """Raise ``EulerianError`` unless ``u`` has decayed at both ends."""
        ends = max(abs(self.u[0]), abs(self.u[-1]))
        if ends >= decay_tol:
            raise EulerianError(
                f"u not decayed at the grid boundary: |u| = {ends:.3e} >= {decay_tol:.1e}")
        if slope_bound is not None and self.max_slope() > slope_bound:
            raise EulerianError(
                f"one-sided slope {self.max_slope():.4g} exceeds bound {slope_bound:.4g}")

    def with_atoms(self, atoms) -> "EulerianState":
        return EulerianState(self.x, self.u, tuple(atoms))

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "u": self.u.tolist(),
                "atoms": [[p, m] for p, m in self.atoms]}

    @classmethod
    def from_dict(cls, d: dict) -> "EulerianState":
        try:
            return cls(d["x"], d["u"], tuple(tuple(a) for a in d.get("atoms", [])))
        except (KeyError, TypeError) as exc:
            raise EulerianError(f"malformed Eulerian document: {exc}") from exc


def _query(x) -> np.ndarray:
    xq = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xq)):
        raise EulerianError("invalid query point")
    return xq


def compute_F(state: EulerianState, x):
    """Absolutely continuous energy ``int_{-inf}^x (u^2 + u_x^2)``; atoms excluded."""
    xq = _query(x)
    Fn = state.F_nodes()
    # F is linear inside a cell under the midpoint rule
    out = np.interp(xq, state.x, Fn, left=0.0, right=Fn[-1])
    return float(out) if out.ndim == 0 else out


def p_px_nodes(state: EulerianState) -> tuple[np.ndarray, np.ndarray]:
    left, right = cell_kernel_sums(state.x, state.cell_pressure_mass())
    return 0.25 * (left + right), 0.25 * (right - left)


def compute_p_px(state: EulerianState, x):
    """``p = 1/4 int e^{-|x-y|}(2u^2+u_x^2) dy`` and its derivative.

    Evaluated from the nodal left/right sums, so a whole grid of queries
    costs O(N + M).
    """
    xq = _query(x)
    scalar = xq.ndim == 0
    xq = np.atleast_1d(xq)
    xs = state.x
    dens = state.cell_pressure_mass() / state.h
    left_n, right_n = cell_kernel_sums(xs, state.cell_pressure_mass())

    left = np.zeros_like(xq)
    right = np.zeros_like(xq)
    below = xq < xs[0]
    above = xq > xs[-1]
    inside = ~(below | above)
    right[below] = np.exp(-(xs[0] - xq[below])) * right_n[0]
    left[above] = np.exp(-(xq[above] - xs[-1])) * left_n[-1]

    xi = xq[inside]
    m = np.clip(np.searchsorted(xs, xi, side="right") - 1, 0, xs.size - 2)
    d1 = xi - xs[m]
    d2 = xs[m + 1] - xi
    left[inside] = np.exp(-d1) * left_n[m] - dens[m] * np.expm1(-d1)
    right[inside] = np.exp(-d2) * right_n[m + 1] - dens[m] * np.expm1(-d2)

    p = 0.25 * (left + right)
    px = 0.25 * (right - left)
    if scalar:
        return float(p[0]), float(px[0])
    return p, px


def h1_norm(state: EulerianState) -> float:
    return float(np.sqrt(np.sum(state.cell_energy())))


def nu_total(state: EulerianState) -> float:
    """Total mass of nu: ac energy plus atoms."""
    return float(np.sum(state.cell_energy()) + sum(m for _, m in state.atoms))


def derived_fields(state: EulerianState) -> dict[str, np.ndarray]:
    """Nodal ``(x, u, F, p, p_x)``, the columns of the CSV export."""
    p, px = p_px_nodes(state)
    return {"x": state.x, "u": state.u, "F": state.F_nodes(), "p": p, "p_x": px}


def sample(fn, x, atoms=()) -> EulerianState:
    """Build a state by sampling a callable on a grid."""
    x = np.asarray(x, dtype=float)
    return EulerianState(x, np.asarray(fn(x), dtype=float), tuple(atoms))
