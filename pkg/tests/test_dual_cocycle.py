import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floquet_dde import DelayCocycle, GridSpec, StateVector, TorusDriver, TorusPoint, unit_e
from floquet_dde.dual_cocycle import (
    DualCocycle, DualVector, dual_norm, dual_norm_coords, e_star, in_dual_cone, pairing,
)
from floquet_dde.state_space import norm_coords

G = GridSpec(64)
O = TorusPoint(0.0)


def test_e_star_normalization():
    es = e_star(G)
    assert math.isclose(pairing(unit_e(G), es, G), 1.0, rel_tol=1e-15)
    assert math.isclose(dual_norm(es, G), 1.0, rel_tol=1e-15)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_e_star_other_p(p):
    g = GridSpec(16, p)
    assert math.isclose(pairing(unit_e(g), e_star(g), g), 1.0, rel_tol=1e-15)
    assert math.isclose(dual_norm(e_star(g), g), 1.0, rel_tol=1e-15)


def test_pairing_zero_and_mismatch():
    assert pairing(StateVector.zero(G), e_star(G), G) == 0.0
    with pytest.raises(ValueError):
        pairing(StateVector.zero(GridSpec(8)), e_star(G), G)


def test_pairing_positive_on_cones(rng):
    for _ in range(100):
        u = StateVector.from_coords(rng.uniform(0, 1, G.dim))
        v = DualVector.from_coords(rng.uniform(0, 1, G.dim))
        assert pairing(u, v, G) >= 0


def test_holder(rng):
    # the dual norm is the norm of the pairing functional
    for p in (1.5, 2.0, 4.0):
        g = GridSpec(16, p)
        for _ in range(50):
            u, v = rng.standard_normal(g.dim), rng.standard_normal(g.dim)
            assert abs(pairing(StateVector.from_coords(u), DualVector.from_coords(v), g)) <= \
                norm_coords(u, g) * dual_norm_coords(v, g) * (1 + 1e-14)


class TestDualApply:
    def test_identity(self, quasi_cocycle, rng):
        v = DualVector.from_coords(rng.standard_normal(G.dim))
        np.testing.assert_array_equal(DualCocycle(quasi_cocycle).dual_apply(O, 0.0, v).coords, v.coords)

    def test_duality(self, quasi_cocycle, rng):
        dual = DualCocycle(quasi_cocycle)
        for _ in range(100):
            n = int(rng.integers(0, 10 * G.m + 1))
            om = TorusPoint(rng.uniform())
            u = rng.standard_normal(G.dim)
            v = DualVector.from_coords(rng.standard_normal(G.dim))
            lhs = pairing(StateVector.from_coords(quasi_cocycle.propagate(quasi_cocycle.advance(om, -n / G.m), u, n)), v, G)
            rhs = pairing(StateVector.from_coords(u), dual.dual_apply(om, n / G.m, v), G)
            assert abs(lhs - rhs) <= 1e-12 * norm_coords(u, G) * dual_norm(v, G)

    def test_unit_matrix(self, quasi_cocycle):
        dual = DualCocycle(quasi_cocycle)
        np.testing.assert_allclose(dual.unit_matrix(O), dual.matrix(O, 1.0), rtol=1e-14, atol=1e-16)

    @given(st.integers(0, 100), st.integers(0, 100))
    def test_dual_cocycle_law(self, nt, ns):
        cy = DelayCocycle(TorusDriver(0.1, 0.05, 1.0, 0.5), GridSpec(16))
        dual = DualCocycle(cy)
        om = TorusPoint(0.3)
        v = np.random.default_rng(nt + 7 * ns).standard_normal(18)
        whole = dual.matrix(om, (nt + ns) / 16) @ v
        split = dual.matrix(cy.advance(om, -nt / 16), ns / 16) @ (dual.matrix(om, nt / 16) @ v)
        assert np.max(np.abs(whole - split)) <= 1e-12 * max(np.max(np.abs(whole)), 1e-300)

    def test_preserves_dual_cone_and_injective(self, quasi_cocycle, rng):
        dual = DualCocycle(quasi_cocycle)
        for _ in range(20):
            v = DualVector.from_coords(rng.uniform(0, 1, G.dim))
            t = int(rng.integers(1, 6))
            out = dual.dual_apply(TorusPoint(rng.uniform()), float(t), v)
            assert in_dual_cone(out)
            assert dual_norm(out, G) > 1e-12 * dual_norm(v, G)

    def test_misaligned(self, quasi_cocycle):
        with pytest.raises(ValueError):
            DualCocycle(quasi_cocycle).dual_apply(O, 0.3333, e_star(G))


class TestDualFocusing:
    def test_e_star(self, delay_one):
        f = DualCocycle(delay_one).focusing_constants(O, e_star(G))
        assert math.isclose(f.beta, 1 / delay_one.kappa(delay_one.advance(O, -2.0)), rel_tol=1e-14)
        assert f.kappa >= 1.0

    def test_sandwich(self, delay_one, quasi_cocycle, rng):
        for cy in (delay_one, quasi_cocycle):
            dual = DualCocycle(cy)
            for _ in range(50):
                om = TorusPoint(rng.uniform())
                v = DualVector.from_coords(rng.uniform(0, 1, G.dim))
                f = dual.focusing_constants(om, v)
                mat = dual.matrix(om, 2.0)
                img, ref = mat @ v.coords, mat @ e_star(G).coords
                scale = np.max(ref) * f.beta * f.kappa
                assert np.all(f.beta * ref <= img + 1e-12 * scale)
                assert np.all(img <= f.kappa * f.beta * ref + 1e-12 * scale)

    def test_rejects(self, delay_one):
        dual = DualCocycle(delay_one)
        with pytest.raises(ValueError):
            dual.focusing_constants(O, DualVector(0.0, np.zeros(G.m + 1)))
        with pytest.raises(ValueError):
            dual.focusing_constants(O, DualVector(-1.0, np.ones(G.m + 1)))
