import numpy as np
import pytest
from hypothesis import given

from chdissip.eulerian import EulerianState, compute_F
from chdissip.lagrangian import (LagrangianError, LagrangianState, RelabelFunction,
                                 normalize_to_F0, relabel, validate)
from chdissip.transform import eul_to_lag, eul_to_lag_with_label, lag_to_eul

from conftest import eulerian_states, peakon_state


def delta0(n=21, L=10.0, mass=1.0):
    x = np.linspace(-L, L, n)
    return EulerianState(x, np.zeros(n), ((0.0, mass),))


def arctan_label(lo=-40.0, hi=40.0, n=8001):
    return RelabelFunction.from_callable(lambda s: s + np.arctan(s), np.linspace(lo, hi, n))


class TestL:
    def test_zero(self):
        x = np.linspace(-5, 5, 11)
        X = eul_to_lag(EulerianState(x, np.zeros(11)))
        np.testing.assert_array_equal(X.y, X.xi)
        for name in ("U", "V", "H"):
            assert np.all(getattr(X, name) == 0)

    def test_delta_plateau(self):
        X = eul_to_lag(delta0())
        y_expected = np.where(X.xi <= 0, X.xi, np.where(X.xi <= 1, 0.0, X.xi - 1))
        np.testing.assert_allclose(X.y, y_expected, atol=1e-14)
        np.testing.assert_allclose(X.H, X.xi - X.y, atol=1e-14)
        assert np.all(X.V == 0)
        # the plateau [0, 1] is resolved by nodes at both ends
        assert 0.0 in X.xi and 1.0 in X.xi

    def test_peakon(self):
        X = eul_to_lag(peakon_state())
        np.testing.assert_allclose(X.V, X.H, atol=1e-12)
        np.testing.assert_array_equal(X.y + X.H, X.xi)
        assert np.max(X.c2_residual()) <= 1e-10 * (1 + X.H[-1])
        assert X.H[-1] == pytest.approx(2.0, abs=1e-8)

    @given(eulerian_states())
    def test_normalized_at_nodes(self, e):
        X = eul_to_lag(e)
        assert np.all(np.abs(X.y + X.H - X.xi) <= 1e-13 * (1 + np.abs(X.xi)))
        # atoms off the grid become nodes, and u is linear across them;
        # an atom within roundoff of a node uses that node
        span = e.x[-1] - e.x[0]
        x = np.union1d(e.x, [p for p, _ in e.atoms if np.min(np.abs(e.x - p)) > 1e-12 * span])
        refined = EulerianState(x, np.interp(x, e.x, e.u))
        total = compute_F(refined, x[-1]) + sum(m for _, m in e.atoms)
        assert X.H[-1] == pytest.approx(total, rel=1e-12, abs=1e-14)

    def test_atom_outside_grid(self):
        with pytest.raises(Exception, match="outside"):
            eul_to_lag(EulerianState(np.linspace(-1, 1, 5), np.zeros(5), ((3.0, 1.0),)))


class TestM:
    def test_trivial(self):
        xi = np.linspace(-3, 3, 7)
        z, zc = np.zeros(7), np.zeros(6)
        e = lag_to_eul(LagrangianState(xi=xi, y=xi, U=z, V=z, H=z, y_xi=np.ones(6),
                                       U_xi=zc, V_xi=zc, H_xi=zc))
        assert np.all(e.u == 0) and e.atoms == ()

    def test_delta_round_trip(self):
        e = lag_to_eul(eul_to_lag(delta0()))
        assert np.all(e.u == 0)
        assert e.atoms == ((0.0, 1.0),)

    def test_peakon_round_trip(self):
        e = peakon_state()
        back = lag_to_eul(eul_to_lag(e), e.x)
        assert np.max(np.abs(back.u - e.u)) <= 1e-8
        assert back.atoms == ()

    @given(eulerian_states())
    def test_M_after_L_is_identity(self, e):
        back = lag_to_eul(eul_to_lag(e), e.x)
        assert np.max(np.abs(back.u - e.u)) <= 1e-8 * (1 + np.max(np.abs(e.u)))
        assert len(back.atoms) == len(e.atoms)
        for (p, m), (q, n) in zip(back.atoms, e.atoms):
            assert p == pytest.approx(q, abs=1e-8)
            assert m == pytest.approx(n, rel=1e-8)

    @given(eulerian_states())
    def test_L_after_M_is_identity_on_F0(self, e):
        X = eul_to_lag(e)
        Y = eul_to_lag(lag_to_eul(X))
        for name in ("xi", "y", "U", "V", "H"):
            np.testing.assert_allclose(getattr(Y, name), getattr(X, name),
                                       atol=1e-10 * (1 + abs(X.H[-1])), err_msg=name)

    @given(eulerian_states(max_atoms=1, n_range=(400, 600)))
    def test_L_after_M_stays_in_class(self, e):
        # M regrids at the relabeled nodes, so agreement is up to
        # the midpoint rule's refinement error in the u^2 part of the energy
        X = relabel(eul_to_lag(e), arctan_label())
        Y = eul_to_lag(lag_to_eul(X))
        a, b = normalize_to_F0(X), normalize_to_F0(Y)
        h = np.max(np.diff(e.x))
        for name in ("y", "U", "H"):
            np.testing.assert_allclose(np.interp(a.xi, b.xi, getattr(b, name)), getattr(a, name),
                                       atol=h**2 * (1 + abs(a.H[-1])), err_msg=name)

    def test_rejects_decreasing_y(self):
        X = eul_to_lag(peakon_state(64))
        y = X.y.copy()
        y[10] = y[12] + 1.0
        with pytest.raises(LagrangianError, match="y decreases"):
            lag_to_eul(X.replace(y=y))

    def test_output_grid(self):
        e = peakon_state(512)
        xg = np.linspace(-5, 5, 7)
        back = lag_to_eul(eul_to_lag(e), xg)
        np.testing.assert_array_equal(back.x, xg)
        np.testing.assert_allclose(back.u, np.exp(-np.abs(xg)), atol=1e-3)


class TestLabelled:
    def test_identity_label(self):
        e = peakon_state(512, atoms=[(1.0, 0.5)])
        X = eul_to_lag(e)
        Y = eul_to_lag_with_label(e, RelabelFunction.identity(X.xi))
        for name in ("xi", "y", "U", "V", "H", "y_xi", "U_xi", "V_xi", "H_xi"):
            np.testing.assert_allclose(getattr(Y, name), getattr(X, name), atol=1e-12, err_msg=name)

    def test_two_paths_agree(self):
        e = peakon_state(1024)
        g = arctan_label()
        A = eul_to_lag_with_label(e, g)
        B = relabel(eul_to_lag(e), g)
        common, ia, ib = np.intersect1d(A.xi, B.xi, return_indices=True)
        assert common.size > 100
        for name in ("y", "U", "V", "H"):
            assert np.max(np.abs(getattr(A, name)[ia] - getattr(B, name)[ib])) <= 1e-8, name
        assert validate(A).passed

    def test_delta_plateau_survives_any_label(self):
        g = arctan_label()
        X = eul_to_lag_with_label(delta0(), g)
        e = lag_to_eul(X)
        assert len(e.atoms) == 1
        assert e.atoms[0][0] == pytest.approx(0.0, abs=1e-12)
        assert e.atoms[0][1] == pytest.approx(1.0, rel=1e-12)

    def test_rejects_bad_label(self):
        with pytest.raises(LagrangianError):
            eul_to_lag_with_label(delta0(), RelabelFunction.from_callable(lambda s: s**3,
                                                                          np.linspace(-1, 1, 201)))
