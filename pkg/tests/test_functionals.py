import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varfrac.assembly import assemble
from varfrac.functionals import (GridFunction1D, GridFunction2D, SeminormConfig, SeminormQuadrature,
                                 classical_hardy_constant, gagliardo_integral, hardy_classical_check,
                                 hardy_constant, hardy_weighted_check, improved_trace_check,
                                 improved_trace_constant, phi_weights, seminorm_A, sobolev_norm,
                                 trace_constant, trace_inequality_check, trace_norm)
from varfrac.mesh import build_mesh
from varfrac.order_field import GsVariant, OrderField, WeightSpec
from varfrac.quadrature import Status
from varfrac.solver import harmonic_extension


def unit(s, p=2.0):
    return WeightSpec(OrderField.constant(s), GsVariant.UNIT, p)


@pytest.fixture(scope="module")
def mode_system():
    mesh = build_mesh(1, 33, 33, 2.0, 2.0)
    return assemble(mesh, WeightSpec(OrderField.constant(0.5)))


@pytest.fixture(scope="module")
def first_mode(mode_system):
    v = np.sin(np.pi * mode_system.mesh.x_nodes[1:-1])
    return harmonic_extension(mode_system, v)


class TestConstants:
    def test_trace_constant(self):
        assert trace_constant(2.0, 0.5) == pytest.approx(6.0)

    def test_improved_constant(self):
        assert improved_trace_constant(2.0, 0.5) == pytest.approx(math.sqrt(4 * 4 * 2 * 3 + 9 * 4))
        assert improved_trace_constant(2.0, 0.5) == pytest.approx(11.489, abs=1e-3)

    def test_hardy(self):
        assert hardy_constant(2.0) == 4.0
        assert classical_hardy_constant(2.0, 2.0) == 4.0
        with pytest.raises(ValueError):
            classical_hardy_constant(2.0, 1.0)


class TestGridFunctions:
    def test_interpolation(self):
        g = GridFunction1D(np.array([0.0, 1.0, 0.0]))
        assert g(0.25) == pytest.approx(0.5)
        np.testing.assert_allclose(g.slopes, [2.0, -2.0])

    def test_lipschitz_on_matches_brute_force(self, rng):
        g = GridFunction1D(rng.standard_normal(41))
        lo = rng.uniform(0, 1, 50)
        hi = np.minimum(lo + rng.uniform(0, 0.5, 50), 1.0)
        got = g.lipschitz_on(lo, hi)
        n = g.n_cells
        for a, b, val in zip(lo, hi, got):
            c0 = min(int(np.floor(a * n)), n - 1)
            c1 = max(min(int(np.ceil(b * n)) - 1, n - 1), c0)
            assert val == np.abs(g.slopes[c0:c1 + 1]).max()

    def test_2d_line_and_call(self):
        vals = np.add.outer(np.linspace(0, 1, 5), 2 * np.linspace(0, 1, 5))  # v = x2 + 2 x1
        g = GridFunction2D(vals)
        assert g(np.array([0.3, 0.6])) == pytest.approx(1.2)
        np.testing.assert_allclose(g.line(0, 0.5).values, 0.5 + 2 * np.linspace(0, 1, 5))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            GridFunction1D(np.array([0.0, np.nan]))


class TestTraceNorm:
    def test_zero(self):
        assert trace_norm(unit(0.5), GridFunction1D(np.zeros(5))) == 0.0

    def test_normalized_mode(self):
        v = GridFunction1D.sample(lambda x: np.sqrt(2) * np.sin(np.pi * x), 4096)
        assert trace_norm(unit(0.5), v) == pytest.approx(1.0, abs=1e-6)

    def test_constant_function(self):
        assert trace_norm(unit(0.25), GridFunction1D(np.ones(9))) == pytest.approx(0.5, rel=1e-12)

    def test_step_order_integrates_each_side(self, step_field):
        spec = WeightSpec(step_field, GsVariant.UNIT)
        # w~ = (2 s)^2: 0.36 on the left half, 1.96 on the right half
        assert trace_norm(spec, GridFunction1D(np.ones(4))) == pytest.approx(math.sqrt(0.5 * 0.36 + 0.5 * 1.96))

    def test_2d_base_vector(self):
        spec = WeightSpec(OrderField.constant(0.5), GsVariant.UNIT)
        v = np.ones(9)  # 3 x 3 interior nodes of a 4-cell grid
        g = GridFunction2D.from_base(v)
        # tensor product of a trapezoid profile with int profile^2 = 2/3
        assert trace_norm(spec, g) == pytest.approx(2 / 3, rel=1e-12)


class TestSobolevNorm:
    def test_matrix_and_quadrature_agree(self, small_step_system, rng):
        u = rng.standard_normal(small_step_system.n_free)
        a = sobolev_norm(small_step_system, u)
        b = sobolev_norm(small_step_system, u, method="quadrature", n_gauss=6)
        assert a == pytest.approx(b, rel=1e-6)

    def test_p_homogeneous(self, small_step_system, rng):
        u = rng.standard_normal(small_step_system.n_free)
        assert sobolev_norm(small_step_system, 3 * u, p=3.0) == pytest.approx(3 * sobolev_norm(small_step_system, u, p=3.0))


class TestTraceInequality:
    def test_zero(self, mode_system):
        res = trace_inequality_check(mode_system, np.zeros(mode_system.n_free))
        assert (res.lhs, res.rhs, res.holds) == (0.0, 0.0, True)

    def test_first_mode_strict(self, mode_system, first_mode):
        res = trace_inequality_check(mode_system, first_mode)
        assert res.extra["C"] == 6.0
        assert res.margin > 0

    def test_sigma_must_fit(self):
        sys_ = assemble(build_mesh(1, 5, 5, 0.3, 1.0), unit(0.5))
        with pytest.raises(ValueError):
            trace_inequality_check(sys_, np.zeros(sys_.n_free), sigma=0.5)


class TestPhiWeights:
    @settings(max_examples=40)
    @given(st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(2.0, 4.0))
    def test_constant_order_formula(self, s, t, tau, p):
        if abs(t - tau) < 1e-6:
            return
        w = phi_weights(unit(s, p), 0, None, t, tau)
        d = 1 - 2 * s
        pc = p / (p - 1)
        ref = (1 + d * (1 - pc)) ** p / abs(t - tau) ** (p - d)
        assert w.phi == pytest.approx(ref, rel=1e-10)
        assert w.psi == pytest.approx(ref, rel=1e-10)
        assert w.w == pytest.approx(ref, rel=1e-10)

    def test_half_order_arithmetic(self):
        Phi, phi, psi, w = phi_weights(unit(0.5), 0, None, 0.75, 0.25)
        assert (Phi, phi, psi, w) == pytest.approx((1.0, 4.0, 4.0, 4.0))

    def test_step_field_asymmetry(self, step_field):
        spec = WeightSpec(step_field, GsVariant.POINTWISE)
        w = phi_weights(spec, 0, None, 0.3, 0.8)
        assert w.phi != pytest.approx(w.psi, rel=1e-3)
        assert w.w == min(w.phi, w.psi)

    def test_diagonal_rejected(self):
        with pytest.raises(ValueError):
            phi_weights(unit(0.5), 0, None, 0.4, 0.4)


class TestSeminorm:
    def test_constant_function_vanishes(self):
        res = seminorm_A(unit(0.3), GridFunction1D(np.full(9, 2.0)))
        assert res.value == 0.0 and res.remainder == 0.0

    @pytest.mark.parametrize("f", [lambda x: x * (1 - x), lambda x: np.sqrt(2) * np.sin(np.pi * x)])
    def test_half_order_matches_gagliardo(self, f):
        v = GridFunction1D.sample(f, 32)
        res = seminorm_A(unit(0.5), v)
        ref = gagliardo_integral(v, 2.0, 2.0)
        assert res.converged
        assert abs(res.value - ref) <= 0.01 * ref

    def test_two_resolutions_agree(self):
        v = GridFunction1D.sample(lambda x: np.sqrt(2) * np.sin(np.pi * x), 32)
        coarse = seminorm_A(unit(0.5), v, cfg=SeminormConfig(levels=16, n_gauss=4))
        fine = seminorm_A(unit(0.5), v, cfg=SeminormConfig(levels=34, n_gauss=8))
        assert 0 < fine.value < math.inf
        assert coarse.value == pytest.approx(fine.value, rel=0.01)

    def test_remainder_shrinks_with_levels(self):
        v = GridFunction1D.sample(lambda x: x * (1 - x), 16)
        r = [seminorm_A(unit(0.7), v, cfg=SeminormConfig(levels=L)).remainder for L in (10, 20)]
        assert 0 < r[1] < r[0]

    def test_remainder_covers_truncation(self):
        v = GridFunction1D.sample(lambda x: x * (1 - x), 16)
        res = seminorm_A(unit(0.75), v, cfg=SeminormConfig(levels=12))
        ref = 1.5 ** 2 * gagliardo_integral(v, 2.0, 2.5)  # (1 - d)^2 with d = -1/2
        assert res.value <= ref * (1 + 1e-6) and ref <= res.upper * (1 + 1e-6)

    def test_scaling(self):
        v = GridFunction1D.sample(lambda x: x * (1 - x), 16)
        spec = WeightSpec(OrderField.constant(0.4), GsVariant.POINTWISE, 3.0)
        quad = SeminormQuadrature(spec, 16, SeminormConfig(p=3.0))
        a = quad.evaluate(v).value
        b = quad.evaluate(GridFunction1D(2 * v.values)).value
        assert b == pytest.approx(8 * a, rel=1e-12)

    def test_2d_outer_rules_agree(self):
        x = np.linspace(0, 1, 9)
        vals = np.outer(np.sin(np.pi * x), np.sin(np.pi * x))
        v = GridFunction2D(vals)
        spec = unit(0.5)
        a = seminorm_A(spec, v, 0, SeminormConfig(levels=20))
        b = seminorm_A(spec, v, 0, SeminormConfig(levels=20, outer="full"))
        assert a.value == pytest.approx(b.value, rel=0.02)

    def test_bad_input(self):
        with pytest.raises(TypeError):
            seminorm_A(unit(0.5), np.ones(4))


class TestImprovedTrace:
    def test_zero(self, mode_system):
        res = improved_trace_check(mode_system, np.zeros(mode_system.n_free))
        assert (res.lhs, res.rhs, res.holds) == (0.0, 0.0, True)

    def test_first_mode_strict(self, mode_system, first_mode):
        res = improved_trace_check(mode_system, first_mode)
        assert res.extra["C"] == pytest.approx(math.sqrt(132))
        assert res.extra["remainder"] >= 0
        assert res.margin > 0

    def test_requires_unit_height(self):
        sys_ = assemble(build_mesh(1, 5, 5, 0.5, 1.0), unit(0.5))
        with pytest.raises(ValueError):
            improved_trace_check(sys_, np.zeros(sys_.n_free))


def hat(t):
    return np.clip(1 - np.asarray(t), 0, None)


def dhat(t):
    return np.where(np.asarray(t) < 1, -1.0, 0.0)


class TestHardy:
    def test_weighted_unit_weight(self):
        res = hardy_weighted_check(lambda t: np.ones_like(t), lambda t: t, 2.0, df=lambda t: np.ones_like(t))
        assert res.lhs == pytest.approx(1.0, rel=1e-8) and res.rhs == pytest.approx(4.0, rel=1e-8)
        assert res.holds

    def test_weighted_sqrt_weight(self):
        res = hardy_weighted_check(np.sqrt, lambda t: t, 2.0, df=lambda t: np.ones_like(t))
        assert res.lhs == pytest.approx(1 / 6, rel=1e-8)
        assert res.rhs == pytest.approx(8 / 3, rel=1e-8)
        assert res.lhs / res.rhs < 1

    def test_weighted_requires_vanishing_start(self):
        with pytest.raises(ValueError):
            hardy_weighted_check(lambda t: np.ones_like(t), lambda t: 1 + t, 2.0)

    def test_weighted_power_p3(self):
        # f(t)/t = 1, so lhs = 1 for every p
        res = hardy_weighted_check(lambda t: np.ones_like(t), lambda t: t, 3.0, df=lambda t: np.ones_like(t))
        assert res.lhs == pytest.approx(1.0, rel=1e-8)
        assert res.rhs == pytest.approx(hardy_constant(3.0), rel=1e-8)

    def test_classical_hat(self):
        res = hardy_classical_check(hat, 2.0, 2.0, support=1.0, df=dhat)
        assert res.lhs == pytest.approx(1 / 3, rel=1e-8)
        assert res.rhs == pytest.approx(4 / 3, rel=1e-8)
        assert res.holds

    @pytest.mark.parametrize("p,eps", [(2.0, 2.0), (3.0, 2.5), (2.5, 4.0)])
    def test_classical_scaling_invariance(self, p, eps):
        c = 2.0
        a = hardy_classical_check(hat, p, eps, support=1.0, df=dhat)
        b = hardy_classical_check(lambda t: hat(t / c), p, eps, support=c, df=lambda t: dhat(t / c) / c)
        assert b.lhs / a.lhs == pytest.approx(c ** (eps - p + 1), rel=1e-10)
        assert b.rhs / a.rhs == pytest.approx(c ** (eps - p + 1), rel=1e-10)

    def test_classical_finite_difference_derivative(self):
        f = lambda t: np.clip(1 - np.asarray(t), 0, None) ** 3
        a = hardy_classical_check(f, 2.0, 2.0, df=lambda t: -3 * np.clip(1 - np.asarray(t), 0, None) ** 2)
        b = hardy_classical_check(f, 2.0, 2.0)
        assert a.rhs == pytest.approx(b.rhs, rel=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(2.0, 4.0), st.floats(0.05, 3.0), st.integers(1, 3))
    def test_classical_holds_for_power_profiles(self, p, gap, m):
        eps = p - 1 + gap
        f = lambda t: np.clip(1 - np.asarray(t), 0, None) ** m
        df = lambda t: -m * np.clip(1 - np.asarray(t), 0, None) ** (m - 1)
        assert hardy_classical_check(f, p, eps, df=df).holds


def test_gagliardo_integral_linear():
    # v = t: int int |t - tau|^(2 - k) = 2 / ((3 - k)(4 - k))
    v = GridFunction1D(np.linspace(0, 1, 5))
    assert gagliardo_integral(v, 2.0, 1.5) == pytest.approx(2 / (1.5 * 2.5), rel=1e-9)


def test_seminorm_status_enum():
    v = GridFunction1D.sample(lambda x: x * (1 - x), 8)
    assert seminorm_A(unit(0.5), v).status is Status.CONVERGED
