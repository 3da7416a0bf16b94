import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fragkin import kernels as K
from fragkin.grid import GeometricGrid, build_grid
from fragkin.solver import (
    DiscreteOperator,
    death_rate,
    discretize_fragments,
    gain_rate,
    truncate_kernel,
)
from fragkin.state import DensityState

import oracles

GRID = build_grid(8, 16)


def op_for(c, f, grid=GRID, n=8.0):
    return DiscreteOperator(grid, truncate_kernel(c, n, 0.5), f)


class TestTruncation:
    def test_interior_equal(self):
        c = K.singular_product(1.0, 0.5)
        tk = truncate_kernel(c, 8, 0.5)
        x = np.geomspace(1 / 8, 8, 50)
        np.testing.assert_array_equal(tk(x[:, None], x[None, :]), c.rate(x[:, None], x[None, :]))
        assert tk(1.0, 1.0) == c.rate(1.0, 1.0)

    def test_beyond_collar_and_midpoint(self):
        c = K.constant(2.0)
        tk = truncate_kernel(c, 8, 0.5)
        assert tk(8 * math.exp(0.5), 1.0) == 0.0
        assert tk(100.0, 1.0) == 0.0 and tk(1e-3, 1.0) == 0.0
        assert tk(8 * math.exp(0.25), 1.0) == pytest.approx(1.0, rel=1e-12)
        assert tk(1 / 8 * math.exp(-0.25), 1.0) == pytest.approx(1.0, rel=1e-12)

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    def test_dominated_symmetric(self, x, y):
        c = K.singular_product(1.0, 0.5, 1.0)
        tk = truncate_kernel(c, 8, 0.7)
        assert tk(x, y) <= c.rate(x, y)
        assert tk(x, y) == tk(y, x)

    def test_continuous_across_domain_edge(self):
        tk = truncate_kernel(K.constant(), 8, 0.5)
        assert abs(tk(8 * (1 + 1e-9), 1.0) - 1.0) < 1e-8


class TestRates:
    def test_zero_state(self):
        op = op_for(K.constant(), K.powerlaw(0, 0, 8))
        s = DensityState(GRID, np.zeros(GRID.cell_count))
        assert death_rate(s, op, 3) == 0.0 and gain_rate(s, op, 3) == 0.0

    def test_constant_kernel_death_is_number(self):
        op = op_for(K.constant(), K.powerlaw(0, 0, 8))
        s = DensityState(GRID, np.exp(-GRID.pivots))
        n0 = s.moment(0)
        assert all(death_rate(s, op, i) == pytest.approx(n0, rel=1e-14) for i in range(GRID.cell_count))

    def test_singular_single_cell(self):
        one = GeometricGrid(math.sqrt(2), 1, np.array([1.0, 2.0]))
        op = op_for(K.singular_product(1.0, 0.5), K.powerlaw(0, 0, 2), grid=one, n=2.0)
        s = DensityState(one, [1.0])
        assert death_rate(s, op, 0) == pytest.approx((1 * math.sqrt(2)) ** -1.0, rel=1e-14)
        # C(p, p) with p = sqrt 2: (p * p)^(-1/2)
        assert death_rate(s, op, 0) == pytest.approx((math.sqrt(2) * math.sqrt(2)) ** -0.5)

    def test_no_gain_above_support(self):
        op = op_for(K.constant(), K.powerlaw(0, 0, 8))
        v = np.zeros(GRID.cell_count)
        v[10] = 1.0
        s = DensityState(GRID, v)
        assert all(gain_rate(s, op, i) == 0 for i in range(11, GRID.cell_count))
        assert gain_rate(s, op, 10) > 0

    def test_gain_matches_brute_double_loop(self):
        g = build_grid(2.0, 3)
        op = op_for(K.constant(1.3), K.powerlaw(0, 0, 2), grid=g, n=2.0)
        x, w = g.pivots, g.widths
        # independent fragment weights: uniform daughters, one rescale per mother
        W = np.zeros((len(x), len(x)))
        for m in range(len(x)):
            left, right = g.edges[:-1], np.minimum(g.edges[1:], x[m])
            cnt = np.where(right > left, 2 * (right - left) / x[m], 0)
            cnt[m + 1 :] = 0
            W[m] = cnt * x[m] / np.sum(x * cnt) / w
        vals = np.array([0.7, 1.1, 0.4, 0.9][: len(x)])
        for i in range(len(x)):
            ref = oracles.brute_gain(lambda a, b: 1.3, lambda c, m, z: W[m, c], x, w, vals, i)
            assert op.gain_rates(vals)[i] == pytest.approx(ref, rel=1e-13)
            assert op.death_rates(vals)[i] == pytest.approx(oracles.brute_death(lambda a, b: 1.3, x, w, vals, i), rel=1e-13)

    @settings(max_examples=50)
    @given(arrays(float, GRID.cell_count, elements=st.floats(0, 5)))
    def test_rhs_conserves_mass_exactly(self, v):
        for c, f in ((K.constant(), K.powerlaw(0, 0, 8)), (K.singular_product(1, 0.5), K.powerlaw(1.5, 0.1, 8))):
            op = op_for(c, f)
            scale = np.sum(GRID.pivots * op.death_rates(v) * v * GRID.widths) + 1e-300
            assert abs(np.sum(GRID.pivots * op.rhs(v) * GRID.widths)) <= 1e-13 * scale + 1e-300

    def test_rhs_mass_loss_equals_shattering_rate(self):
        op = op_for(K.cheng_redner(1, 0.0), K.half_split())
        v = np.exp(-GRID.pivots)
        dm = np.sum(GRID.pivots * op.rhs(v) * GRID.widths)
        assert op.table.any_loss
        assert dm == pytest.approx(-op.loss_rate(v), rel=1e-12)

    def test_batched_rates_match_rowwise(self):
        op = op_for(K.cheng_redner(2, 0.5), K.half_split("larger"))
        rng = np.random.default_rng(2)
        V = rng.uniform(0, 1, (3, GRID.cell_count))
        G = op.gain_rates(V)
        for k in range(3):
            np.testing.assert_allclose(G[k], op.gain_rates(V[k]), rtol=1e-14)


class TestFragments:
    def test_powerlaw_rescale_tends_to_one(self):
        scales = []
        for cpd in (8, 16, 32, 64):
            g = build_grid(8, cpd)
            m = g.cell_count - 1
            fw = discretize_fragments(K.powerlaw(0, 0, 8), g, m, m)
            assert np.sum(g.pivots * fw.weights * g.widths) == pytest.approx(g.pivots[m], rel=1e-14)
            assert np.all(fw.weights >= 0) and np.all(fw.weights[m + 1 :] == 0)
            scales.append(abs(fw.scale - 1))
        assert scales == sorted(scales, reverse=True) and scales[-1] < 1e-3

    def test_powerlaw_count_error_vanishes(self):
        errs = []
        for cpd in (8, 32, 128):
            g = build_grid(8, cpd)
            m = g.cell_count - 1
            fw = discretize_fragments(K.powerlaw(1.0, 0, 8), g, m, m)
            errs.append(abs(np.sum(fw.weights * g.widths) - 1.5))
        assert errs[0] > errs[1] > errs[2]

    def test_half_split_on_pivot(self):
        # pivots p_i = q^(i + 1/2) / n; choose n so 2 p_a = p_b exactly: q = 2^(1/2)
        g = GeometricGrid(2.0, 1, 0.5 * 2.0 ** (np.arange(5) / 2))
        m = 2
        # y/2 = p_2 / 2 = p_0 since q^2 = 2
        fw = discretize_fragments(K.half_split(), g, m, m)
        nz = np.flatnonzero(fw.weights)
        assert list(nz) == [0]
        assert fw.weights[0] * g.widths[0] == pytest.approx(2.0, rel=1e-12)

    def test_half_split_two_point(self):
        g = build_grid(8, 8)
        m = g.cell_count - 2
        fw = discretize_fragments(K.half_split(), g, m, m)
        nz = np.flatnonzero(fw.weights)
        assert len(nz) == 2 and nz[1] == nz[0] + 1
        ca, cb = oracles.two_point_split(g.pivots[m], g.pivots[nz[0]], g.pivots[nz[1]])
        np.testing.assert_allclose(fw.weights[nz] * g.widths[nz], [ca, cb], rtol=1e-12)
        assert np.sum(fw.weights * g.widths) == pytest.approx(2.0)
        assert np.sum(fw.weights * g.widths * g.pivots) == pytest.approx(g.pivots[m])

    def test_half_split_shattering_loss(self):
        g = build_grid(8, 8)
        fw = discretize_fragments(K.half_split(), g, 0, 0)
        assert fw.shattering and fw.lost_mass == pytest.approx(g.pivots[0])
        assert np.all(fw.weights == 0)

    def test_larger_rule_no_split_keeps_mother(self):
        g = build_grid(8, 8)
        fw = discretize_fragments(K.half_split("larger"), g, 3, 10)
        assert np.flatnonzero(fw.weights).tolist() == [3]
        assert fw.weights[3] * g.widths[3] == pytest.approx(1.0)

    def test_custom_kernel_uses_cell_integrals(self):
        f = K.FragmentationKernelSpec("custom", custom_eval=lambda x, y, z: 3 * x / y**2, theta_max=1.5)
        g = build_grid(8, 16)
        m = g.cell_count - 1
        fw = discretize_fragments(f, g, m, 0)
        ref = discretize_fragments(K.powerlaw(1.0, 0, 8), g, m, 0)
        np.testing.assert_allclose(fw.weights, ref.weights, rtol=1e-12, atol=1e-14)


def test_survival_map_zero_kernel_identity():
    op = op_for(K.constant(0.0), K.powerlaw(0, 0, 8))
    g0 = np.exp(-GRID.pivots)
    nodes = np.tile(g0, (5, 1)) * 3.0
    np.testing.assert_array_equal(op.survival_map(nodes, g0, 0.1), np.tile(g0, (5, 1)))
