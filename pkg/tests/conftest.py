"""Shared fixtures.  The full-resolution runs are computed once per session."""

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from chdissip.config import grid_with_nodes
from chdissip.eulerian import EulerianState
from chdissip.evolution import SolverConfig, solve
from chdissip.oracle import exact_u, params_from_Dtstar

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", parent=settings.get_profile("default"), max_examples=1000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

PAP = params_from_Dtstar(1.0, 1.0)
RUN_TIMES = (0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 1.05, 1.1, 1.25, 1.5, 1.75, 2.0)


def peakon_state(n=4096, c=1.0, lo=-20.0, hi=20.0, atoms=()):
    x = grid_with_nodes(lo, hi, n, [0.0])
    return EulerianState(x, c * np.exp(-np.abs(x)), tuple(atoms))


def pap_state(n=4096, params=PAP, lo=-20.0, hi=20.0, atoms=()):
    x = grid_with_nodes(lo, hi, n, [params.q0, -params.q0])
    return EulerianState(x, exact_u(params, 0.0, x), tuple(atoms))


def run_config(times=RUN_TIMES, dt=1e-3, t_end=2.0):
    return SolverConfig(dt=dt, t_end=t_end, output_times=tuple(times))


@pytest.fixture(scope="session")
def pap_run():
    return solve(pap_state(), run_config())


@pytest.fixture(scope="session")
def peakon_run():
    return solve(peakon_state(), run_config())


@pytest.fixture(scope="session")
def peakon_atom_run():
    return solve(peakon_state(atoms=[(3.0, 0.5)]), run_config())


@st.composite
def eulerian_states(draw, max_atoms=2, n_range=(16, 160)):
    """Smooth compactly decaying profiles on random grids, with optional atoms."""
    n = draw(st.integers(*n_range))
    L = draw(st.floats(14.0, 25.0))
    jitter = draw(st.floats(0.0, 0.4))
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    base = np.linspace(-L, L, n)
    h = base[1] - base[0]
    x = base + jitter * h * rng.uniform(-0.5, 0.5, n)
    x[0], x[-1] = -L, L
    x = np.sort(x)
    k = draw(st.integers(1, 3))
    u = np.zeros_like(x)
    for _ in range(k):
        a = draw(st.floats(-2.0, 2.0))
        c = draw(st.floats(-3.0, 3.0))
        w = draw(st.floats(0.3, 2.0))
        u += a * np.exp(-(((x - c) / w) ** 2))
    atoms = []
    for _ in range(draw(st.integers(0, max_atoms))):
        pos = draw(st.floats(-L / 2, L / 2))
        atoms.append((pos, draw(st.floats(0.01, 3.0))))
    # atoms at distinct positions
    atoms = list({round(p, 9): (p, m) for p, m in atoms}.values())
    return EulerianState(x, u, tuple(atoms))
