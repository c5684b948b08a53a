"""Lagrangian quadruples ``(y, U, V, H)`` and relabeling.

Layout: ``y, U, V, H`` live on the label nodes ``xi``; the derivative
fields ``y_xi, U_xi, V_xi, H_xi`` are one value per cell between
consecutive nodes, as are ``tau`` and ``broken``.  A cell with
``y_xi == 0`` is a collapsed piece of label space, i.e. energy sitting at a
single point ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .report import Check, DiagnosticsReport

C_FLOOR = 1e-10
NODE_FIELDS = ("y", "U", "V", "H")
CELL_FIELDS = ("y_xi", "U_xi", "V_xi", "H_xi")


class LagrangianError(ValueError):
    pass


def mask_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs ``[a, b)`` of True in a boolean cell mask."""
    m = np.concatenate(([False], mask, [False])).astype(np.int8)
    d = np.diff(m)
    return list(zip(np.flatnonzero(d == 1).tolist(), np.flatnonzero(d == -1).tolist()))


def _arr(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class LagrangianState:
    xi: np.ndarray
    y: np.ndarray
    U: np.ndarray
    V: np.ndarray
    H: np.ndarray
    y_xi: np.ndarray
    U_xi: np.ndarray
    V_xi: np.ndarray
    H_xi: np.ndarray
    tau: np.ndarray = None
    broken: np.ndarray = None
    t: float = 0.0

    def __post_init__(self):
        xi = _arr(self.xi)
        if xi.ndim != 1 or xi.size < 2:
            raise LagrangianError("structural error: label grid needs at least two nodes")
        if not np.all(np.isfinite(xi)) or not np.all(np.diff(xi) > 0):
            raise LagrangianError("structural error: label grid must be strictly increasing")
        n = xi.size
        object.__setattr__(self, "xi", xi)
        for name in NODE_FIELDS:
            a = _arr(getattr(self, name))
            if a.shape != (n,):
                raise LagrangianError(f"structural error: {name} has shape {a.shape}, expected ({n},)")
            object.__setattr__(self, name, a)
        for name in CELL_FIELDS:
            a = _arr(getattr(self, name))
            if a.shape != (n - 1,):
                raise LagrangianError(f"structural error: {name} has shape {a.shape}, expected ({n - 1},)")
            object.__setattr__(self, name, a)
        tau = np.full(n - 1, np.inf) if self.tau is None else np.array(self.tau, dtype=float)
        if self.broken is None:
            broken = tau <= self.t
        else:
            broken = np.array(self.broken, dtype=bool)
        if tau.shape != (n - 1,) or broken.shape != (n - 1,):
            raise LagrangianError("structural error: tau/broken must have one entry per cell")
        tau.flags.writeable = False
        broken.flags.writeable = False
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "broken", broken)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_nodes(self) -> int:
        return self.xi.size

    @property
    def dxi(self) -> np.ndarray:
        return np.diff(self.xi)

    @property
    def U_mid(self) -> np.ndarray:
        return 0.5 * (self.U[1:] + self.U[:-1])

    def replace(self, **kw) -> "LagrangianState":
        return replace(self, **kw)

    def c2_residual(self) -> np.ndarray:
        """Cellwise ``|U^2 y_xi^2 + U_xi^2 - y_xi V_xi| / (1 + y_xi H_xi)``."""
        r = self.U_mid**2 * self.y_xi**2 + self.U_xi**2 - self.y_xi * self.V_xi
        return np.abs(r) / (1.0 + self.y_xi * self.H_xi)

    def consistency_residual(self) -> dict[str, float]:
        """How far the evolved cell fields drift from differences of the node fields."""
        d = self.dxi
        return {
            "y": float(np.max(np.abs(np.diff(self.y) - self.y_xi * d) / d)),
            "U": float(np.max(np.abs(np.diff(self.U) - self.U_xi * d) / d)),
            "H": float(np.max(np.abs(np.diff(self.H) - self.H_xi * d) / d)),
        }

    def to_dict(self) -> dict:
        d = {"t": self.t, "xi": self.xi.tolist()}
        for name in NODE_FIELDS + CELL_FIELDS:
            d[name] = getattr(self, name).tolist()
        # never-broken cells serialize as null
        d["tau"] = [None if not np.isfinite(v) else float(v) for v in self.tau]
        d["broken"] = self.broken.astype(int).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LagrangianState":
        try:
            tau = [np.inf if v is None else float(v) for v in d["tau"]]
            kw = {name: d[name] for name in NODE_FIELDS + CELL_FIELDS}
            return cls(xi=d["xi"], tau=tau, broken=d.get("broken"), t=d.get("t", 0.0), **kw)
        except (KeyError, TypeError) as exc:
            raise LagrangianError(f"structural error: malformed Lagrangian document ({exc})") from exc


def validate(state: LagrangianState, tol: float = 1e-8, c: float = C_FLOOR,
             decay_tol: float = 1e-6) -> DiagnosticsReport:
    """Membership test for the Lagrangian set, one check per defining condition."""
    if not isinstance(state, LagrangianState):
        raise LagrangianError("structural error: not a LagrangianState")
    scale = 1.0 + abs(state.H[-1])
    xi_mid = 0.5 * (state.xi[1:] + state.xi[:-1])

    def worst(name, values, tol_, where=xi_mid):
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return Check.upper(name, 0.0, tol_)
        k = int(np.argmax(values))
        return Check.upper(name, max(float(values[k]), 0.0), tol_, {"t": state.t, "xi": float(where[k])})

    yx, Vx, Hx = state.y_xi, state.V_xi, state.H_xi
    collapsed = yx <= 0.0
    checks = [
        worst("y_xi_nonnegative", -yx, tol),
        worst("H_xi_ge_V_xi_ge_0", np.maximum(Vx - Hx, -Vx), tol),
        worst("y_xi_plus_H_xi_floor", c - (yx + Hx), 0.0),
        worst("c2_identity", state.c2_residual(), tol),
        worst("collapse_kills_V_xi", np.where(collapsed, np.abs(Vx), 0.0), tol),
        worst("V_H_nondecreasing", np.maximum(-np.diff(state.V), -np.diff(state.H)), tol * scale),
        Check.upper("left_limits_zero", max(abs(state.V[0]), abs(state.H[0])), tol * scale,
                    {"t": state.t, "xi": float(state.xi[0])}),
        Check.upper("boundary_decay", max(abs(state.U[0]), abs(state.U[-1])), decay_tol,
                    {"t": state.t}),
    ]
    return DiagnosticsReport(checks)


@dataclass(frozen=True, eq=False)
class RelabelFunction:
    """Samples of an increasing map ``f`` on its own grid ``xi``."""

    xi: np.ndarray
    f: np.ndarray = field(default=None)

    def __post_init__(self):
        xi = _arr(self.xi)
        f = _arr(self.f)
        if xi.ndim != 1 or xi.shape != f.shape or xi.size < 2:
            raise LagrangianError("relabeling needs matching 1-d samples")
        if not np.all(np.diff(xi) > 0):
            raise LagrangianError("relabeling grid must be strictly increasing")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "f", f)

    @classmethod
    def from_callable(cls, fn, xi) -> "RelabelFunction":
        xi = np.asarray(xi, dtype=float)
        return cls(xi, fn(xi))

    @classmethod
    def identity(cls, xi) -> "RelabelFunction":
        return cls(xi, np.array(xi, dtype=float))

    def slopes(self) -> np.ndarray:
        return np.diff(self.f) / np.diff(self.xi)

    def __call__(self, s):
        """Piecewise-linear evaluation, extended by translation outside the grid."""
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.xi, self.f)
        out = np.where(s < self.xi[0], s + (self.f[0] - self.xi[0]), out)
        return np.where(s > self.xi[-1], s + (self.f[-1] - self.xi[-1]), out)

    def inverse(self, xi=None) -> "RelabelFunction":
        """Monotone inverse, sampled at ``xi`` (default: the image of the grid)."""
        if xi is None:
            return RelabelFunction(self.f, self.xi)
        xi = np.asarray(xi, dtype=float)
        inv = np.interp(xi, self.f, self.xi)
        inv = np.where(xi < self.f[0], xi - (self.f[0] - self.xi[0]), inv)
        inv = np.where(xi > self.f[-1], xi - (self.f[-1] - self.xi[-1]), inv)
        return RelabelFunction(xi, inv)


def is_relabeling(f: RelabelFunction, c_max: float = 100.0) -> bool:
    """Sufficient test: bounded two-sided slopes and square-summable slope deviation."""
    if not (np.all(np.isfinite(f.f)) and np.all(np.isfinite(f.xi))):
        return False
    s = f.slopes()
    if np.any(s < 1.0 / c_max) or np.any(s > c_max):
        return False
    dev = np.sum((s - 1.0) ** 2 * np.diff(f.xi))
    return bool(np.isfinite(dev) and np.all(np.isfinite(f.f - f.xi)))


def _extend_nodes(state: LagrangianState, s: np.ndarray) -> dict[str, np.ndarray]:
    """Node fields at arbitrary labels; outside the grid u = 0 and no energy is added."""
    xi = state.xi
    out = {}
    for name in NODE_FIELDS:
        out[name] = np.interp(s, xi, getattr(state, name))
    lo, hi = s < xi[0], s > xi[-1]
    out["y"] = np.where(lo, state.y[0] + (s - xi[0]), out["y"])
    out["y"] = np.where(hi, state.y[-1] + (s - xi[-1]), out["y"])
    return out


def refine_labels(f: "RelabelFunction", extra: np.ndarray) -> "RelabelFunction":
    """``f`` resampled on its grid plus the labels ``extra`` inside it.

    A grid point of ``f`` closer than a roundoff-sized gap to an extra
    label is dropped, so no new cell is narrower than the label spacing
    can resolve.
    """
    extra = np.unique(extra[(extra > f.xi[0]) & (extra < f.xi[-1])])
    labels = f.xi
    if extra.size:
        tol = 1e-9 * float(np.median(np.diff(f.xi)))
        pos = np.searchsorted(extra, f.xi)
        left = extra[np.clip(pos - 1, 0, extra.size - 1)]
        right = extra[np.clip(pos, 0, extra.size - 1)]
        keep = np.minimum(np.abs(f.xi - left), np.abs(f.xi - right)) > tol
        keep[[0, -1]] = True
        labels = np.union1d(f.xi[keep], extra)
    return RelabelFunction(labels, f(labels))


def cell_slopes(f: "RelabelFunction", s: np.ndarray) -> np.ndarray:
    """Slope of ``f`` on the segment of its own grid containing each ``s`` (1 outside)."""
    k = np.searchsorted(f.xi, s) - 1
    inside = (k >= 0) & (k < f.xi.size - 1)
    return np.where(inside, f.slopes()[np.clip(k, 0, f.xi.size - 2)], 1.0)


def impose_c2(state: LagrangianState) -> LagrangianState:
    """Reset the ac density of live cells so ``U^2 y_xi^2 + U_xi^2 = y_xi V_xi``.

    On a cell cut out of a larger one, the node-average ``U`` moves while
    ``V_xi`` is inherited, which leaves an O(h) residual.  ``V_xi`` is
    recomputed from the identity and ``H_xi`` shifted by the same amount,
    so the singular part ``H_xi - V_xi`` is untouched.
    """
    live = (~state.broken) & (state.y_xi > 0)
    y_xi = state.y_xi[live]
    v_new = (state.U_mid[live] ** 2 * y_xi**2 + state.U_xi[live] ** 2) / y_xi
    V_xi = state.V_xi.copy()
    H_xi = state.H_xi.copy()
    H_xi[live] += v_new - V_xi[live]
    V_xi[live] = v_new
    return state.replace(V_xi=V_xi, H_xi=H_xi)


def relabel(state: LagrangianState, f: RelabelFunction, c_max: float = 100.0) -> LagrangianState:
    """``X o f`` on the grid of ``f`` refined by the preimages of the old nodes.

    With the refinement every new cell sits inside one old cell, where the
    node fields are linear, so interpolation is exact and each cell field
    is the chain rule ``(y o f)_xi = (y_xi o f) f_xi`` with the old value.
    """
    if not is_relabeling(f, c_max):
        raise LagrangianError("not a relabeling function")
    g = refine_labels(f, f.inverse(state.xi).f)
    s = g.f
    nodes = _extend_nodes(state, s)
    mid = 0.5 * (g.xi[1:] + g.xi[:-1])
    slope = cell_slopes(f, mid)

    # each new cell lies inside one old cell k, where the chain rule is exact
    xi = state.xi
    k = np.searchsorted(xi, f(mid)) - 1
    inside = (k >= 0) & (k < xi.size - 1)
    kc = np.clip(k, 0, xi.size - 2)
    cells = {name: np.where(inside, getattr(state, name)[kc], 1.0 if name == "y_xi" else 0.0) * slope
             for name in CELL_FIELDS}
    broken = inside & state.broken[kc]
    tau = np.where(broken, state.tau[kc], np.inf)
    return impose_c2(LagrangianState(xi=g.xi, tau=tau, broken=broken, t=state.t,
                                     **nodes, **cells))


def normalize_to_F0(state: LagrangianState) -> LagrangianState:
    """The representative with ``y + H = id``.

    The new labels are ``y + H`` at the old nodes, so the node values carry
    over unchanged; cell fields are divided by ``y_xi + H_xi``, the
    derivative of ``y + H``.
    """
    new_xi = state.y + state.H
    if not np.all(np.diff(new_xi) > 0):
        raise LagrangianError("y + H is not strictly increasing; cannot normalize")
    jac = state.y_xi + state.H_xi
    if np.any(jac <= 0):
        raise LagrangianError("y_xi + H_xi vanishes; cannot normalize")
    cells = {name: getattr(state, name) / jac for name in CELL_FIELDS}
    nodes = {name: getattr(state, name) for name in NODE_FIELDS}
    return LagrangianState(xi=new_xi, tau=state.tau, broken=state.broken, t=state.t,
                           **nodes, **cells)


def quasi_relabel_g(state: LagrangianState) -> np.ndarray:
    """``g = xi - int (1 - 1_{y_xi != 0}) H_xi`` at the nodes.

    For a state in F0 this is ``y + V``; composing the ac-only image of the
    same ``u`` with ``g`` reproduces ``(y, U, V)`` of ``state``.
    """
    collapsed = state.y_xi == 0.0
    lost = np.concatenate(([0.0], np.cumsum(np.where(collapsed, state.H_xi, 0.0) * state.dxi)))
    return state.xi - lost
