"""Exponential-kernel prefix scans.

Everything nonlocal in the solver reduces to sums of the form

    left[i]  = sum_{j <= i} exp(-(y[i] - y[j])) * g[j]
    right[i] = sum_{j >= i} exp(-(y[j] - y[i])) * g[j]

over a nondecreasing coordinate ``y``.  Both satisfy a first-order
recursion, ``left[i] = exp(-(y[i] - y[i-1])) * left[i-1] + g[i]``, so the
whole grid costs O(N).  The recursion is evaluated blockwise with
``cumsum`` on rescaled terms; blocks are cut so the rescaling exponent
never exceeds ``_MAX_SPAN`` and nothing overflows.
"""

from __future__ import annotations

import numpy as np

_MAX_SPAN = 200.0


def _blocks(y: np.ndarray) -> list[tuple[int, int]]:
    n = y.size
    if n == 0:
        return []
    bounds = []
    start = 0
    while start < n:
        stop = int(np.searchsorted(y, y[start] + _MAX_SPAN, side="right"))
        stop = max(stop, start + 1)
        bounds.append((start, stop))
        start = stop
    return bounds


def decay_scan_left(y: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Return ``sum_{j<=i} exp(-(y[i]-y[j])) g[j]`` for nondecreasing ``y``."""
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    out = np.empty_like(g)
    carry = 0.0
    y_prev = y[0] if y.size else 0.0
    for start, stop in _blocks(y):
        y0 = y[start]
        # carry enters the block decayed to y0
        seed = carry * np.exp(-(y0 - y_prev))
        acc = np.cumsum(np.exp(y[start:stop] - y0) * g[start:stop])
        out[start:stop] = np.exp(-(y[start:stop] - y0)) * (acc + seed)
        carry = out[stop - 1]
        y_prev = y[stop - 1]
    return out


def decay_scan_right(y: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Return ``sum_{j>=i} exp(-(y[j]-y[i])) g[j]`` for nondecreasing ``y``."""
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    # mirror: reversed, negated coordinates are nondecreasing again
    return decay_scan_left(-y[::-1], g[::-1])[::-1]


def decay_sums_direct(y: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """O(N^2) reference for the two scans. Only for testing."""
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    kern = np.exp(-np.abs(y[:, None] - y[None, :])) * g[None, :]
    # split by index, not by sign of y[i]-y[j]: flat runs of y are allowed
    idx = np.arange(y.size)
    left = np.where(idx[None, :] <= idx[:, None], kern, 0.0)
    right = np.where(idx[None, :] >= idx[:, None], kern, 0.0)
    return left.sum(axis=1), right.sum(axis=1)


def phi1(d: np.ndarray) -> np.ndarray:
    """``(1 - exp(-d)) / d`` with the removable singularity at 0 filled in."""
    d = np.asarray(d, dtype=float)
    out = np.ones_like(d)
    nz = d > 1e-300
    out[nz] = -np.expm1(-d[nz]) / d[nz]
    return out


def phi2(d: np.ndarray) -> np.ndarray:
    """``(d - 1 + exp(-d)) / d^2``, tending to 1/2 at 0."""
    d = np.asarray(d, dtype=float)
    out = np.full_like(d, 0.5)
    big = d > 1e-3
    out[big] = (d[big] + np.expm1(-d[big])) / d[big] ** 2
    small = ~big
    ds = d[small]
    # Taylor series keeps digits where the closed form cancels
    out[small] = 0.5 - ds / 6.0 + ds**2 / 24.0 - ds**3 / 120.0
    return out


def cell_kernel_sums(x: np.ndarray, cell_mass: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exponential-kernel sums at the nodes of a piecewise-constant density.

    Cell ``k`` spans ``[x[k], x[k+1]]`` and carries total mass
    ``cell_mass[k]`` spread uniformly (a zero-width cell is a point mass).
    Returns ``(left, right)`` with ``left[i] = int_{s<x[i]} e^{-(x[i]-s)} dm(s)``
    and ``right[i] = int_{s>x[i]} e^{-(s-x[i])} dm(s)``, both exact for that
    density.
    """
    x = np.asarray(x, dtype=float)
    m = np.asarray(cell_mass, dtype=float)
    w = m * phi1(np.diff(x))
    gl = np.concatenate(([0.0], w))
    gr = np.concatenate((w, [0.0]))
    return decay_scan_left(x, gl), decay_scan_right(x, gr)
