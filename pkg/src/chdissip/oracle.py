"""Closed-form dissipative peakon-antipeakon solution.

Initial data ``u0(x) = p0 (exp(-|x - q0|) - exp(-|x + q0|))`` with
``p0 > 0 > q0``.  The peaks collide at the origin at ``t_star``; the
dissipative continuation is ``u = 0`` from then on and all of the energy
``4 D^2`` leaves at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _log_cosh(s):
    s = np.abs(np.asarray(s, dtype=float))
    small = np.log1p(2.0 * np.sinh(0.5 * np.minimum(s, 1.0)) ** 2)
    large = s + np.log1p(np.exp(-2.0 * s)) - math.log(2.0)
    return np.where(s < 1.0, small, large)


@dataclass(frozen=True)
class PeakonAntipeakonParams:
    p0: float
    q0: float
    D: float
    t_star: float

    def __post_init__(self):
        if not (self.p0 > 0 and self.q0 < 0 and self.D > 0 and self.t_star > 0):
            raise ValueError(f"invalid peakon-antipeakon parameters {self}")

    def amplitude(self, t):
        """``(p(t), q(t))`` for ``t < t_star``."""
        s = self.D * (self.t_star - np.asarray(t, dtype=float))
        # D / tanh and -log cosh keep digits as s -> 0 and for large s
        p = self.D / np.tanh(s)
        return p, -_log_cosh(s)


def params_from_Dtstar(D: float, t_star: float) -> PeakonAntipeakonParams:
    if not (D > 0 and t_star > 0):
        raise ValueError("D and t_star must be positive")
    s = D * t_star
    p0 = D / math.tanh(s)
    q0 = -float(_log_cosh(s))
    return PeakonAntipeakonParams(p0, q0, D, t_star)


def params_from_initial(p0: float, q0: float) -> PeakonAntipeakonParams:
    if not (p0 > 0 and q0 < 0):
        raise ValueError("need p0 > 0 and q0 < 0")
    w = math.sqrt(-math.expm1(2.0 * q0))
    D = p0 * w
    # ln((p0 + D) / (p0 - D)) / 2D, with p0 - D = p0 e^{2 q0} / (1 + w)
    t_star = (math.log1p(w) - q0) / D
    return PeakonAntipeakonParams(p0, q0, D, t_star)


def _before(params, t):
    return float(t) < params.t_star


def exact_u(params: PeakonAntipeakonParams, t: float, x):
    x = np.asarray(x, dtype=float)
    if not _before(params, t):
        return np.zeros_like(x) if x.ndim else 0.0
    p, q = params.amplitude(t)
    return p * (np.exp(-np.abs(x - q)) - np.exp(-np.abs(x + q)))


def exact_F(params: PeakonAntipeakonParams, t: float, x):
    x = np.asarray(x, dtype=float)
    if not _before(params, t):
        return np.zeros_like(x) if x.ndim else 0.0
    D2 = params.D**2
    p, q = params.amplitude(t)
    e2q = math.exp(2.0 * q)
    one_minus = -math.expm1(2.0 * q)
    left = D2 * one_minus * np.exp(2.0 * np.minimum(x - q, 0.0))
    mid = 2.0 * D2 + 2.0 * p**2 * e2q * np.sinh(2.0 * np.clip(x, q, -q))
    right = 4.0 * D2 - D2 * one_minus * np.exp(-2.0 * np.maximum(x + q, 0.0))
    return np.where(x < q, left, np.where(x < -q, mid, right))


def _exp_integral(m, c, s, e):
    """``int_s^e exp(m y + c) dy`` for ``s <= e``, without overflow or cancellation."""
    length = np.maximum(e - s, 0.0)
    if m > 0:
        return np.where(length > 0, np.exp(m * e + c) * -np.expm1(-m * length) / m, 0.0)
    if m < 0:
        return np.where(length > 0, np.exp(m * s + c) * -np.expm1(m * length) / -m, 0.0)
    return np.exp(c) * length


def exact_p_px(params: PeakonAntipeakonParams, t: float, x):
    """Closed-form ``(p, p_x)``; both vanish from ``t_star`` on.

    The density ``2u^2 + u_x^2`` is a sum of exponentials on the three
    intervals cut by the peaks.  Each piece is integrated against the
    kernel separately, so no p^2-sized terms cancel as the peaks merge.
    """
    x = np.asarray(x, dtype=float)
    if not _before(params, t):
        z = np.zeros_like(x) if x.ndim else 0.0
        return z, z
    p, q = (float(v) for v in params.amplitude(t))
    a, b = q, -q
    gap = -np.expm1(2.0 * q)  # 1 - e^{-(b - a)}
    log_cl = math.log(3.0) + 2.0 * (math.log(p) - a + math.log(gap))
    log_cr = math.log(3.0) + 2.0 * (math.log(p) + b + math.log(gap))
    lp2 = 2.0 * math.log(p)
    # (interval, slope k, log coefficient, sign): density = sign * exp(k y + logc)
    pieces = [
        (-np.inf, a, 2.0, log_cl, 1.0),
        (a, b, -2.0, math.log(3.0) + lp2 + 2.0 * a, 1.0),
        (a, b, 2.0, math.log(3.0) + lp2 - 2.0 * b, 1.0),
        (a, b, 0.0, math.log(2.0) + lp2 + 2.0 * q, -1.0),
        (b, np.inf, -2.0, log_cr, 1.0),
    ]
    left = np.zeros_like(x)
    right = np.zeros_like(x)
    for s, e, k, logc, sign in pieces:
        # y < x weighs exp(y - x); y > x weighs exp(x - y)
        left += sign * _exp_integral(k + 1.0, logc - x, s, np.minimum(e, x))
        right += sign * _exp_integral(k - 1.0, logc + x, np.maximum(s, x), e)
    return 0.25 * (left + right), 0.25 * (right - left)


def oracle_table(params: PeakonAntipeakonParams, times, x) -> np.ndarray:
    """Rows ``(t, x, u, F, p, p_x)`` over the product grid, t-major."""
    x = np.asarray(x, dtype=float)
    rows = []
    for t in times:
        p, px = exact_p_px(params, t, x)
        block = np.column_stack([np.full_like(x, float(t)), x, exact_u(params, t, x) + 0 * x,
                                 exact_F(params, t, x) + 0 * x, p + 0 * x, px + 0 * x])
        rows.append(block)
    return np.vstack(rows)
