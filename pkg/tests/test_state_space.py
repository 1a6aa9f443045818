import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from floquet_dde.state_space import (
    GridSpec, StateVector, comparable, gauge, in_cone, norm_coords, norm_x, projdist,
    projdist_norm_bound, unit_e,
)

G = GridSpec(16)
positive = arrays(np.float64, G.dim, elements=st.floats(0.05, 20.0))


def sv(c):
    return StateVector.from_coords(c)


class TestGrid:
    def test_weights(self):
        for m in (1, 8, 64):
            g = GridSpec(m)
            assert math.isclose(g.weights.sum(), 1.0, abs_tol=1e-15)
            assert np.all(g.weights > 0)
            assert g.nodes[0] == -1.0 and g.nodes[-1] == 0.0

    def test_conjugate_exponent(self):
        g = GridSpec(8, p=3.0)
        assert math.isclose(1 / g.p + 1 / g.q, 1.0)

    @pytest.mark.parametrize("m,p", [(0, 2.0), (8, 1.0), (8, math.inf), (2.5, 2.0)])
    def test_rejects_bad(self, m, p):
        with pytest.raises(ValueError):
            GridSpec(m, p)

    def test_arrays_read_only(self):
        with pytest.raises(ValueError):
            G.weights[0] = 1.0


class TestNorm:
    def test_head_only(self):
        for p in (1.5, 2.0, 4.0):
            g = GridSpec(8, p)
            assert norm_x(StateVector.constant(1.0, 0.0, g), g) == 1.0

    def test_unit_tail(self):
        assert math.isclose(norm_x(StateVector.constant(0.0, 1.0, G), G), 1.0, rel_tol=1e-15)

    def test_p_near_one(self):
        # p = 1 itself is excluded; the example value 3 is the p -> 1 limit
        g = GridSpec(8, 1.000001)
        assert math.isclose(norm_x(StateVector.constant(1.0, 2.0, g), g), 3.0, rel_tol=1e-5)

    def test_unit_e(self):
        for p in (1.5, 2.0, 3.0):
            g = GridSpec(8, p)
            assert math.isclose(norm_x(unit_e(g), g), 1.0, rel_tol=1e-15)

    def test_zero_iff_zero(self):
        assert norm_x(StateVector.zero(G), G) == 0.0

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            norm_x(StateVector.zero(GridSpec(8)), G)

    @given(positive, arrays(np.float64, G.dim, elements=st.floats(0.0, 1.0)))
    def test_monotone(self, v, frac):
        u = v * frac
        assert norm_x(sv(u), G) <= norm_x(sv(v), G) * (1 + 1e-15)

    def test_columnwise(self, rng):
        c = rng.standard_normal((G.dim, 5))
        expect = [norm_x(sv(c[:, i]), G) for i in range(5)]
        np.testing.assert_allclose(norm_coords(c, G), expect, rtol=1e-15)


class TestCone:
    def test_examples(self):
        assert in_cone(StateVector.constant(1.0, 1.0, G))
        assert not in_cone(StateVector.constant(-1.0, 1.0, G))
        assert in_cone(StateVector.zero(G))

    def test_tolerance_clamps_roundoff(self):
        u = StateVector.constant(1.0, 1.0, G)
        assert in_cone(StateVector(-1e-14, u.tail))
        assert not in_cone(StateVector(-1e-9, u.tail))

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            StateVector(math.nan, np.zeros(3))
        with pytest.raises(ValueError):
            StateVector(0.0, [0.0, math.inf])


class TestGauge:
    def test_identity_and_scaling(self):
        u = StateVector.constant(0.3, 0.7, G)
        g1 = gauge(u, u)
        assert (g1.m_ratio, g1.M_ratio, g1.dist) == (1.0, 1.0, 0.0)
        g2 = gauge(u * 2.0, u)
        assert (g2.m_ratio, g2.M_ratio, g2.dist) == (2.0, 2.0, 0.0)

    def test_two_ratio_case(self):
        c = np.ones(G.dim)
        c[::2] = 2.0
        g = gauge(sv(c), sv(np.ones(G.dim)))
        assert g.m_ratio == 1.0 and g.M_ratio == 2.0 and g.osc == 1.0
        assert math.isclose(g.dist, math.log(2.0))

    def test_support_mismatch(self):
        u = StateVector.constant(1.0, 1.0, G)
        v = StateVector(0.0, u.tail)
        assert gauge(u, v).dist == math.inf
        assert gauge(v, u).dist == math.inf
        assert not comparable(u, v)

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            gauge(unit_e(G), StateVector.zero(G))
        with pytest.raises(ValueError):
            comparable(StateVector.zero(G), unit_e(G))

    def test_comparable_examples(self):
        u = StateVector.constant(0.2, 0.9, G)
        assert comparable(u, unit_e(G))
        assert comparable(u, 3.0 * u)

    @given(positive, positive)
    def test_sandwich_and_symmetry(self, a, b):
        g = gauge(sv(a), sv(b))
        assert np.all(g.m_ratio * b <= a * (1 + 1e-14))
        assert np.all(a <= g.M_ratio * b * (1 + 1e-14))
        assert g.dist >= 0 and g.osc >= 0
        assert math.isclose(g.dist, projdist(sv(b), sv(a)), rel_tol=1e-12, abs_tol=1e-14)

    @given(positive, st.floats(0.01, 100.0))
    def test_projective_invariance(self, a, lam):
        assert projdist(sv(a), sv(lam * a)) <= 1e-14

    @given(positive, positive, positive)
    def test_triangle(self, a, b, c):
        assert projdist(sv(a), sv(c)) <= projdist(sv(a), sv(b)) + projdist(sv(b), sv(c)) + 1e-12


class TestNormBound:
    def test_equal(self):
        e = unit_e(G)
        assert projdist_norm_bound(e, e, G) == (0.0, 0.0)

    def test_ln2_gives_three(self):
        c = np.ones(G.dim)
        c[0] = 2.0
        u = sv(c / norm_coords(c, G))
        v = unit_e(G)
        assert math.isclose(projdist_norm_bound(u, v, G)[1], 3.0, rel_tol=1e-12)

    def test_random_pairs(self, rng):
        for _ in range(200):
            a = rng.uniform(0.01, 1.0, G.dim)
            b = a * np.exp(rng.uniform(-1.0, 1.0, G.dim))
            lhs, rhs = projdist_norm_bound(sv(a / norm_coords(a, G)), sv(b / norm_coords(b, G)), G)
            assert lhs <= rhs

    def test_rejects(self):
        e = unit_e(G)
        with pytest.raises(ValueError):
            projdist_norm_bound(e * 2.0, e, G)
        v = StateVector(0.0, np.full(G.m + 1, 1.0))
        with pytest.raises(ValueError):
            projdist_norm_bound(e, v / norm_x(v, G), G)
