import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varfrac.order_field import (Box, GsVariant, Kind, OrderField, WeightSpec, check_H5, eval_G,
                                 eval_order, eval_trace_weight, eval_weight, g_of_order, gamma_fn)
from varfrac.quadrature import Status

# 2^(-1/2) Gamma(1/4) / Gamma(3/4), evaluated with math.gamma and checked at 30 digits.
G_QUARTER = 2.092099240106203


def unit(field):
    return WeightSpec(field, GsVariant.UNIT)


class TestEvalOrder:
    def test_constant(self):
        assert eval_order(OrderField.constant(0.5), 0.3) == 0.5

    def test_distance_clamped_at_anchor(self):
        f = OrderField.distance(0.5, 0.4, [0.5], s_min=0.05)
        assert eval_order(f, 0.5) == pytest.approx(0.05)

    def test_step_lookup(self, step_field):
        assert eval_order(step_field, 0.75) == 0.7
        assert eval_order(step_field, 0.25) == 0.3

    def test_step_2d(self):
        f = OrderField.step([([(0, 0.5), (0, 1)], 0.2), ([(0.5, 1), (0, 1)], 0.6)])
        assert eval_order(f, [0.7, 0.1]) == 0.6
        with pytest.raises(ValueError):
            eval_order(f, 0.7)

    def test_step_cells_must_cover(self):
        with pytest.raises(ValueError, match="cover"):
            OrderField.step([([(0.0, 0.4)], 0.3), ([(0.5, 1.0)], 0.7)])

    def test_step_cells_must_not_overlap(self):
        with pytest.raises(ValueError):
            OrderField.step([([(0.0, 0.6)], 0.3), ([(0.4, 1.0)], 0.7), ([(0.0, 0.0)], 0.5)])

    @pytest.mark.parametrize("kw", [dict(s_min=0.0), dict(s_min=0.6, s_max=0.5), dict(s_max=1.0)])
    def test_bad_bounds(self, kw):
        with pytest.raises(ValueError):
            OrderField.constant(0.5, **kw)

    @pytest.mark.parametrize("sigma,eps", [(1.0, 0.5), (0.5, 0.0), (0.0, 0.3)])
    def test_distance_parameter_ranges(self, sigma, eps):
        with pytest.raises(ValueError):
            OrderField.distance(sigma, eps, [0.5])

    @given(st.floats(0.01, 0.99), st.floats(0.0, 1.0), st.floats(0.05, 0.5), st.floats(0.5, 0.95))
    def test_values_stay_in_bounds(self, value, x, lo, hi):
        f = OrderField.constant(value, s_min=lo, s_max=hi)
        assert lo <= f(np.array([x]))[0] <= hi

    @given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20), st.floats(0.1, 0.9),
           st.floats(0.05, 0.9))
    def test_distance_field_in_bounds(self, xs, sigma, eps):
        f = OrderField.distance(sigma, eps, [0.3, 0.8])
        vals = f(np.array(xs))
        assert np.all((vals >= f.s_min) & (vals <= f.s_max))

    @pytest.mark.parametrize("field", [
        OrderField.constant(0.4),
        OrderField.step([([(0.0, 0.25)], 0.6), ([(0.25, 1.0)], 0.2)], s_min=0.1),
        OrderField.distance(0.5, 0.3, [[0.2, 0.4]], power=0.5),
    ])
    def test_dict_round_trip(self, field):
        assert OrderField.from_dict(field.to_dict()) == field

    def test_breaks_along(self, step_field):
        np.testing.assert_allclose(step_field.breaks_along(0), [0.5])
        assert OrderField.constant(0.5).breaks_along(0).size == 0
        assert OrderField.distance(0.5, 0.3, [0.5]).breaks_along(0) is None

    def test_mean_of_step(self, step_field):
        assert step_field.mean == pytest.approx(0.5, abs=1e-12)


class TestG:
    def test_pointwise_half_is_one(self):
        assert eval_G(GsVariant.POINTWISE, OrderField.constant(0.5), 0.3) == pytest.approx(1.0, abs=1e-14)

    def test_pointwise_quarter(self):
        assert eval_G(GsVariant.POINTWISE, OrderField.constant(0.25), 0.1) == pytest.approx(G_QUARTER, rel=1e-12)

    def test_mean_constant_is_one_for_half(self):
        f = OrderField.constant(0.5)
        for x in (0.0, 0.3, 1.0):
            assert eval_G(GsVariant.MEAN_CONSTANT, f, x) == pytest.approx(1.0, abs=1e-14)

    def test_mean_constant_uses_mean_order(self, step_field):
        g = [eval_G(GsVariant.MEAN_CONSTANT, step_field, x) for x in (0.1, 0.9)]
        assert g[0] == g[1] == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(0.01, 0.99))
    def test_gamma_matches_stdlib(self, x):
        assert float(gamma_fn(x)) == pytest.approx(math.gamma(x), rel=1e-13)

    @given(st.floats(0.001, 0.999))
    def test_pointwise_positive_and_finite(self, s):
        g = float(g_of_order(s))
        assert 0.0 < g < math.inf
        assert g == pytest.approx(2 ** (2 * s - 1) * math.gamma(s) / math.gamma(1 - s), rel=1e-12)


class TestWeights:
    def test_half_order_weight_is_one(self):
        spec = WeightSpec(OrderField.constant(0.5), GsVariant.POINTWISE)
        assert eval_weight(spec, 0.2, 0.37) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("s,expected", [(0.25, 2.0), (0.75, 0.5)])
    def test_unit_weight_powers(self, s, expected):
        assert eval_weight(unit(OrderField.constant(s)), 0.5, 4.0) == pytest.approx(expected)

    def test_weight_rejects_base(self):
        with pytest.raises(ValueError):
            eval_weight(unit(OrderField.constant(0.5)), 0.5, 0.0)

    @pytest.mark.parametrize("s,p,g,expected", [
        (0.5, 2.0, GsVariant.POINTWISE, 1.0),
        (0.25, 2.0, GsVariant.UNIT, 0.25),
        (0.5, 3.0, GsVariant.UNIT, 8.0),
    ])
    def test_trace_weight(self, s, p, g, expected):
        spec = WeightSpec(OrderField.constant(s), g, p)
        assert eval_trace_weight(spec, 0.4) == pytest.approx(expected, rel=1e-13)

    def test_p_below_two_rejected(self):
        with pytest.raises(ValueError):
            WeightSpec(OrderField.constant(0.5), p=1.5)

    @settings(max_examples=50)
    @given(st.floats(0.05, 0.95), st.floats(1e-6, 10.0))
    def test_weight_positive(self, s, y):
        spec = WeightSpec(OrderField.constant(s))
        assert spec.weight(0.3, y) > 0


class TestH5:
    def test_integrand_identically_one(self):
        res = check_H5(unit(OrderField.constant(0.5)), 0.5)
        assert res.converged and res.value == pytest.approx(1.0, rel=1e-10)

    def test_quarter_order_closed_form(self):
        # z at the edge; the integral of x^(-1/2) on (0, 1) is 2
        res = check_H5(unit(OrderField.constant(0.25)), 1e-300)
        assert res.converged and res.value == pytest.approx(2.0, rel=1e-6)

    def test_z_must_be_interior(self):
        with pytest.raises(ValueError):
            check_H5(unit(OrderField.constant(0.5)), 0.0)

    @pytest.fixture
    def vanishing_order(self):
        # s >= |x - 1/2|^(1/2) within 1/4 of x0 = 1/2, s > 0.2 elsewhere, s(1/2) = 0 up to the clamp
        return OrderField.distance(0.9, 0.5, [0.5], power=0.4, s_min=1e-12)

    def test_vanishing_order_satisfies_bounds(self, vanishing_order):
        d = np.linspace(1e-8, 0.25, 2001)
        assert np.all(vanishing_order(0.5 + d) >= d ** 0.5)
        far = np.concatenate([np.linspace(0, 0.2499, 100), np.linspace(0.7501, 1, 100)])
        assert np.all(vanishing_order(far) > 0.2)

    @pytest.mark.parametrize("z", [0.123, 0.3, 0.7])
    def test_vanishing_order_converges_off_zero(self, vanishing_order, z):
        spec = WeightSpec(vanishing_order, GsVariant.MEAN_CONSTANT, 2.0)
        assert check_H5(spec, z).converged

    def test_vanishing_order_flagged_at_zero(self, vanishing_order):
        # the integrand behaves like 1/|x - z| when z is the zero of s
        spec = WeightSpec(vanishing_order, GsVariant.MEAN_CONSTANT, 2.0)
        assert check_H5(spec, 0.5).status is Status.DIVERGENT

    @pytest.mark.parametrize("values", [(0.3, 0.7), (0.05, 0.95), (0.9, 0.1)])
    def test_step_fields_converge(self, values):
        f = OrderField.step([([(0.0, 0.5)], values[0]), ([(0.5, 1.0)], values[1])])
        for z in (0.25, 0.5, 0.8):
            assert check_H5(WeightSpec(f, GsVariant.POINTWISE), z).converged


def test_box_half_open_except_far_face():
    b = Box((0.0,), (0.5,))
    assert not b.contains(np.array([[0.5]]))[0]
    assert b.contains(np.array([[0.0]]))[0]
    assert Box((0.5,), (1.0,)).contains(np.array([[1.0]]))[0]
    assert b.dim == 1 and b.volume == 0.5


def test_kind_values():
    assert {k.value for k in Kind} == {"constant", "step", "distance"}
