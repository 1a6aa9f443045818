import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from floquet_dde import DelayCocycle, GridSpec, StateVector, TorusDriver, TorusPoint, unit_e
from floquet_dde.delay_cocycle import exp_weights, sandwich_violation
from floquet_dde.state_space import comparable_coords, norm_coords, norm_x

G = GridSpec(64)
O = TorusPoint(0.0)


def cocycle(a0=0.0, b0=0.0, a1=0.0, b1=0.0, grid=G):
    return DelayCocycle(TorusDriver(a0, a1, b0, b1), grid)


def test_exp_weights_branches_agree():
    a = np.array([-1.0 - 1e-12, -1.0, 1.0, 1.0 + 1e-12])
    psi, chi = exp_weights(a)
    assert abs(psi[0] - psi[1]) < 1e-11 and abs(psi[2] - psi[3]) < 1e-11
    assert abs(chi[0] - chi[1]) < 1e-11 and abs(chi[2] - chi[3]) < 1e-11
    p0, c0 = exp_weights(0.0)
    assert p0 == 0.5 and c0 == 0.5
    # psi + chi = (e^a - 1) / a
    for x in (-3.0, -0.2, 0.7, 5.0):
        p, c = exp_weights(x)
        assert math.isclose(p + c, math.expm1(x) / x, rel_tol=1e-14)


class TestIntegrateUnit:
    @pytest.mark.parametrize("a0", [-1.0, 0.0, 0.4])
    def test_decoupled(self, a0):
        cy = cocycle(a0=a0)
        out = cy.integrate_unit(O, StateVector(1.0, np.linspace(3, -2, G.m + 1)))
        assert math.isclose(out.head, math.exp(a0), rel_tol=1e-13)
        np.testing.assert_allclose(out.tail, np.exp(a0 * (1 + G.nodes)), rtol=1e-13)

    def test_superposition_example(self, delay_one):
        out = delay_one.integrate_unit(O, StateVector.constant(1.0, 1.0, G))
        assert math.isclose(out.head, 2.0, rel_tol=1e-14)
        np.testing.assert_allclose(out.tail, 2.0 + G.nodes, rtol=1e-14)

    def test_jump_at_zero(self, delay_one):
        # the solver's history ends at the head value, so a jump between
        # tail[m] and head is smeared over the last substep: O(h) error there only
        out = delay_one.integrate_unit(O, StateVector.constant(0.0, 1.0, G))
        np.testing.assert_allclose(out.tail[:-1], 1.0 + G.nodes[:-1], rtol=1e-14)
        assert math.isclose(out.head, 1.0 - G.h / 2, rel_tol=1e-14)
        assert abs(out.head - 1.0) <= G.h

    @pytest.mark.parametrize("a0,b0", [(0.3, 0.7), (-1.2, 2.0), (0.0, 1.0), (2.0, 0.1)])
    def test_constant_coefficients_exact(self, a0, b0):
        # reference: variation of constants with the piecewise-linear history, by adaptive quadrature
        cy = cocycle(a0=a0, b0=b0)
        tail = np.cos(3 * G.nodes) + 2
        u = StateVector(tail[-1], tail)
        hist = np.concatenate((tail[:-1], [u.head]))
        nodes = np.arange(G.m + 1) * G.h

        def phi(s):
            return np.interp(s, nodes, hist)

        def z(t):
            total = math.exp(a0 * t) * u.head
            for k in range(int(round(t * G.m))):
                lo, hi = k * G.h, (k + 1) * G.h
                total += quad(lambda s: math.exp(a0 * (t - s)) * b0 * phi(s), lo, hi, epsabs=1e-15, epsrel=1e-12)[0]
            return total

        out = cy.integrate_unit(O, u)
        assert abs(out.head - z(1.0)) <= 1e-10 * abs(z(1.0))
        for j in (8, 31, 50):
            assert abs(out.tail[j] - z(j * G.h)) <= 1e-10 * abs(z(j * G.h))

    def test_second_order_on_smooth_data(self):
        drv = TorusDriver(0.1, 0.8, 1.0, 0.9)
        ref_grid = GridSpec(1024)
        ref = DelayCocycle(drv, ref_grid).propagate(O, np.concatenate(([1.0], 1 + ref_grid.nodes ** 2)), 2 * 1024)[0]
        errs = []
        for m in (16, 32, 64):
            g = GridSpec(m)
            z = DelayCocycle(drv, g).propagate(O, np.concatenate(([1.0], 1 + g.nodes ** 2)), 2 * m)[0]
            errs.append(abs(z - ref))
        assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


class TestCocycle:
    def test_zero_time_identity(self, quasi_cocycle, rng):
        u = StateVector.from_coords(rng.standard_normal(G.dim))
        np.testing.assert_array_equal(quasi_cocycle.cocycle_apply(O, 0.0, u).coords, u.coords)

    def test_two_units(self, quasi_cocycle, rng):
        u = StateVector.from_coords(rng.standard_normal(G.dim))
        a = quasi_cocycle.cocycle_apply(O, 2.0, u).coords
        b = quasi_cocycle.cocycle_apply(quasi_cocycle.advance(O, 1.0), 1.0, quasi_cocycle.cocycle_apply(O, 1.0, u)).coords
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(a))

    @given(st.integers(0, 200), st.integers(0, 200), st.floats(0, 1, exclude_max=True))
    def test_cocycle_law(self, ns, nt, angle):
        cy = cocycle(0.1, 1.0, 0.05, 0.5, grid=GridSpec(16))
        om = TorusPoint(angle)
        u = np.random.default_rng(ns * 1000 + nt).standard_normal(18)
        whole = cy.propagate(om, u, ns + nt)
        split = cy.propagate(cy.advance(om, ns / 16), cy.propagate(om, u, ns), nt)
        assert np.max(np.abs(whole - split)) <= 1e-13 * max(np.max(np.abs(whole)), 1e-300)

    def test_kernel_example(self):
        out = cocycle().cocycle_apply(O, 1.0, StateVector.constant(0.0, 1.0, G))
        assert np.all(out.coords == 0.0)

    def test_misaligned_rejected(self, quasi_cocycle):
        with pytest.raises(ValueError):
            quasi_cocycle.cocycle_apply(O, 0.01, unit_e(G))
        with pytest.raises(ValueError):
            quasi_cocycle.cocycle_apply(O, -1.0, unit_e(G))

    def test_trajectory_overlap(self, quasi_cocycle, rng):
        u = StateVector.from_coords(rng.uniform(0, 1, G.dim))
        full = quasi_cocycle.trajectory(O, u, 2.0)
        first = quasi_cocycle.trajectory(O, u, 1.0)
        second = quasi_cocycle.trajectory(quasi_cocycle.advance(O, 1.0), quasi_cocycle.cocycle_apply(O, 1.0, u), 1.0)
        np.testing.assert_array_equal(full.heads[:G.m + 1], first.heads)
        np.testing.assert_allclose(full.heads[G.m:], second.heads, rtol=1e-14)

    def test_trajectory_csv(self, tmp_path, delay_one):
        rec = delay_one.trajectory(O, unit_e(G), 1.0)
        rec.to_csv(tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "t,z" and len(lines) == G.m + 2
        assert float(lines[-1].split(",")[1]) == rec.heads[-1]


class TestMatrix:
    def test_zero_coefficients(self):
        mat = cocycle().unit_matrix(O)
        np.testing.assert_array_equal(mat[:, 0], np.ones(G.dim))
        np.testing.assert_array_equal(mat[:, 1:], 0.0)

    def test_nonnegative(self, quasi_cocycle, telegraph_cocycle, tele_origin):
        assert np.all(quasi_cocycle.unit_matrix(TorusPoint(0.37)) >= 0)
        assert np.all(telegraph_cocycle.unit_matrix(tele_origin) >= 0)

    def test_matvec(self, quasi_cocycle, rng):
        om = TorusPoint(0.81)
        up = quasi_cocycle.assemble_unit_matrix(om)
        for _ in range(50):
            u = StateVector.from_coords(rng.standard_normal(G.dim))
            diff = up.apply(u).coords - quasi_cocycle.integrate_unit(om, u).coords
            assert norm_coords(diff, G) <= 1e-13 * norm_x(u, G)

    def test_monotone(self, quasi_cocycle, rng):
        for _ in range(20):
            u = rng.standard_normal(G.dim)
            v = u + rng.uniform(0, 1, G.dim)
            assert np.all(quasi_cocycle.propagate(O, v, 96) - quasi_cocycle.propagate(O, u, 96) >= -1e-15)


class TestFocusing:
    def test_closed_form(self, delay_one):
        f = delay_one.focusing_constants(O, unit_e(G))
        assert not f.kernel
        assert math.isclose(f.beta, 2.0, rel_tol=1e-13) and math.isclose(f.kappa, 2.0, rel_tol=1e-13)
        assert math.isclose(f.image[0], 7 / 4, rel_tol=1e-14)
        s = G.nodes
        np.testing.assert_allclose(f.image[1:], 1 + (1 + s) / 2 + (1 + s) ** 2 / 4, rtol=1e-14)
        assert sandwich_violation(f.image, f.beta, f.kappa) == 0.0

    def test_kernel_flag(self):
        f = cocycle().focusing_constants(O, StateVector.constant(0.0, 1.0, G))
        assert f.kernel and f.beta == 0.0
        assert np.all(f.image == 0)

    def test_not_in_cone(self, delay_one):
        with pytest.raises(ValueError):
            delay_one.focusing_constants(O, StateVector.constant(-1.0, 1.0, G))

    def test_sandwich_random(self, quasi_cocycle, rng):
        for k in range(40):
            om = TorusPoint(rng.uniform())
            f = quasi_cocycle.focusing_constants(om, StateVector.from_coords(rng.uniform(0, 1, G.dim) ** 3))
            assert f.kappa >= 1.0
            assert not f.kernel
            assert sandwich_violation(f.image, f.beta, f.kappa) <= 1e-12

    def test_kappa_at_least_one(self, rng):
        cy = cocycle(-0.5, 0.3, 1.0, 0.3)
        for _ in range(10):
            assert cy.kappa(TorusPoint(rng.uniform())) >= 1.0


class TestGrowthBound:
    def test_examples(self):
        assert math.isclose(cocycle().growth_bound(O), 3.0)
        assert math.isclose(cocycle(a0=1.0).growth_bound(O), 3 * math.e, rel_tol=1e-14)

    def test_random(self, quasi_cocycle, rng):
        for _ in range(100):
            om = TorusPoint(rng.uniform())
            n = int(rng.integers(1, G.m + 1))
            u = rng.standard_normal(G.dim)
            ratio = norm_coords(quasi_cocycle.propagate(om, u, n), G) / norm_coords(u, G)
            assert ratio <= quasi_cocycle.growth_bound(om)


class TestDichotomy:
    @pytest.mark.parametrize("b0", [0.0, 1.0])
    def test_kernel_or_comparable(self, b0, rng):
        cy = cocycle(0.1, b0, 0.05, 0.5 * b0)
        e = unit_e(G).coords
        for k in range(30):
            u = rng.uniform(0, 1, G.dim)
            if k % 3 == 0:
                u[0] = 0.0
            if k % 5 == 0:
                u[1:] = 0.0
            outs = [cy.propagate(O, u, n) for n in (2 * G.m, 2 * G.m + 7, 3 * G.m)]
            if np.max(np.abs(outs[0])) <= 1e-12 * np.max(u):
                assert all(np.max(np.abs(o)) <= 1e-12 * np.max(u) for o in outs)
            else:
                assert all(comparable_coords(o, e) for o in outs)
