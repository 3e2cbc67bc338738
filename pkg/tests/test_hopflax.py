import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weakot import (CapabilityError, DomainError, GridFunction, ParameterError,
                    ShapeError, add_costs, complement_cost, forward_map,
                    grid_infconv_oracle, hj_residual, hopf_lax,
                    make_custom_cost, make_power_cost, split_cost,
                    split_proportional, split_sum)
from weakot.costs import CostSplit
from weakot.hopflax import (constant, from_callables, hinge_squared, linear,
                            quadratic, quartic, smooth_abs, softplus)

from _oracles import quadratic_hopf_lax, scalar_hopf_lax

HALF_SQ = make_power_cost(2, 0.5)
SQ = make_power_cost(2)
MIXED = add_costs(make_power_cost(2, 0.5), make_power_cost(4, 0.25))

FUNCTIONS = {
    "x2/2": quadratic(1.0),
    "softplus": softplus(),
    "x4/4": quartic(),
    "smooth_abs": smooth_abs(0.3, 0.2),
    "hinge2": hinge_squared(-0.5),
    "shifted": quadratic(3.0, 1.0),
}
THETAS = {"u2/2": HALF_SQ, "u4": make_power_cost(4), "mixed": MIXED,
          "u1.5": make_power_cost(1.5)}


def test_quadratic_example():
    res = hopf_lax(quadratic(1.0), HALF_SQ, 1.0, 2.0)
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.minimizer == pytest.approx(1.0, abs=1e-12)
    assert res.stationarity_residual <= 1e-7


def test_linear_example():
    res = hopf_lax(linear(1.0), HALF_SQ, 1.0, 0.0)
    assert res.value == pytest.approx(-0.5, abs=1e-12)
    assert res.minimizer == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("a, c, t", [(1.0, 1.0, 1.0), (2.0, 0.5, 0.3), (0.5, 3.0, 2.0)])
def test_quadratic_closed_form(a, c, t):
    x = np.linspace(-3, 3, 13)
    res = hopf_lax(quadratic(a), make_power_cost(2, c), t, x)
    np.testing.assert_allclose(res.value, quadratic_hopf_lax(a, c, t, x), atol=1e-12)


@pytest.mark.parametrize("fname", sorted(FUNCTIONS))
@pytest.mark.parametrize("tname", sorted(THETAS))
def test_agrees_with_scalar_minimization(fname, tname):
    f, th = FUNCTIONS[fname], THETAS[tname]
    for t in (0.5, 1.0, 2.0):
        for x in (-2.0, -0.3, 0.0, 1.1, 2.0):
            res = hopf_lax(f, th, t, x)
            val, arg = scalar_hopf_lax(f, th, t, x)
            assert res.value <= val + 1e-10
            assert res.value == pytest.approx(val, abs=1e-8)
            assert res.minimizer == pytest.approx(arg, abs=1e-4)
            assert res.stationarity_residual <= 1e-7


def test_grid_oracle_examples():
    g = GridFunction.sample(lambda x: 0 * x, -2, 2, 0.01)
    assert np.all(grid_infconv_oracle(g, SQ, 1.0).values == 0)
    spike = GridFunction(np.linspace(-2, 2, 401),
                         np.where(np.isclose(np.linspace(-2, 2, 401), 0.0), 0.0, 1e6))
    out = grid_infconv_oracle(spike, SQ, 1.0)
    np.testing.assert_allclose(out.values, spike.grid ** 2, atol=1e-12)
    g = GridFunction.sample(lambda x: 0.5 * x * x, -5, 5, 1e-3)
    assert grid_infconv_oracle(g, HALF_SQ, 1.0).at(2.0) == pytest.approx(1.0, abs=5e-3)


@pytest.mark.parametrize("fname", ["x2/2", "softplus", "x4/4"])
def test_grid_oracle_converges(fname):
    f = FUNCTIONS[fname]
    errors = []
    for h in (0.04, 0.02, 0.01):
        g = grid_infconv_oracle(GridFunction.sample(f.eval, -6, 6, h), MIXED, 1.0)
        inner = np.abs(g.grid) <= 2
        exact = hopf_lax(f, MIXED, 1.0, g.grid[inner]).value
        errors.append(np.max(np.abs(g.values[inner] - exact)))
    assert errors[-1] <= 1e-2
    assert errors[0] >= errors[1] >= errors[2]


def test_grid_oracle_accepts_non_strict_cost():
    abs_cost = make_custom_cost(np.abs, np.sign, strictly_convex=False,
                                superlinear=False, deriv_range=(-1, 1))
    g = GridFunction.sample(lambda x: x * x, -2, 2, 0.01)
    out = grid_infconv_oracle(g, abs_cost, 1.0)
    # slope-1 Lipschitz envelope of x^2
    expected = np.where(np.abs(g.grid) <= 0.5, g.grid ** 2, np.abs(g.grid) - 0.25)
    np.testing.assert_allclose(out.values, expected, atol=1e-9)
    with pytest.raises(CapabilityError):
        hopf_lax(quadratic(), abs_cost, 1.0, 0.0)


def test_grid_function_validation():
    with pytest.raises(ShapeError):
        GridFunction([0.0, 1.0, 3.0], [0.0, 0.0, 0.0])
    with pytest.raises(ShapeError):
        GridFunction([0.0, 1.0], [0.0])
    with pytest.raises(DomainError):
        GridFunction([0.0, 1.0], [0.0, np.inf])
    assert GridFunction.sample(np.sin, 0, 1, 0.25).spacing == pytest.approx(0.25)


def test_time_floor():
    with pytest.raises(ParameterError):
        hopf_lax(quadratic(), SQ, 0.0, 1.0)


@pytest.mark.parametrize("fname", sorted(FUNCTIONS))
@given(x=st.floats(-3, 3), t=st.floats(0.1, 3))
def test_below_f(fname, x, t):
    f = FUNCTIONS[fname]
    assert hopf_lax(f, MIXED, t, x).value <= float(f(x)) + 1e-12


@pytest.mark.parametrize("fname", sorted(FUNCTIONS))
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), t=st.floats(0.1, 3))
def test_result_is_convex(fname, a, b, t):
    f = FUNCTIONS[fname]
    vals = hopf_lax(f, MIXED, t, np.array([a, (a + b) / 2, b])).value
    assert vals[1] <= 0.5 * (vals[0] + vals[2]) + 1e-9


@pytest.mark.parametrize("fname", sorted(FUNCTIONS))
@pytest.mark.parametrize("tname", sorted(THETAS))
def test_minimizer_monotone(fname, tname):
    x = np.linspace(-3, 3, 301)
    T = hopf_lax(FUNCTIONS[fname], THETAS[tname], 1.0, x).minimizer
    assert np.all(np.diff(T) > 0)
    assert np.all(np.diff(T - x) <= 1e-9)


def test_forward_map_examples():
    assert forward_map(quadratic(1.0), HALF_SQ, 1.0, 1.0) == pytest.approx(2.0)
    assert forward_map(quadratic(1.0), SQ, 2.0, 1.0) == pytest.approx(2.0)
    assert forward_map(linear(0.0), MIXED, 1.7, 0.4) == pytest.approx(0.4)


def test_forward_map_domain():
    bounded = make_custom_cost(lambda x: np.logaddexp(x, -x) - np.log(2), np.tanh,
                               superlinear=False, deriv_range=(-1.0, 1.0))
    with pytest.raises(DomainError):
        forward_map(linear(2.0), bounded, 1.0, 0.0)


@pytest.mark.parametrize("fname", sorted(FUNCTIONS))
@pytest.mark.parametrize("tname", sorted(THETAS))
def test_round_trip(fname, tname):
    f, th = FUNCTIONS[fname], THETAS[tname]
    x = np.linspace(-2, 2, 41)
    for t in (0.5, 2.0):
        back = hopf_lax(f, th, t, forward_map(f, th, t, x)).minimizer
        np.testing.assert_allclose(back, x, atol=1e-7)


def test_asymmetric_cost_forward_map():
    # theta(u) = u^2 for u > 0 and 2 u^2 otherwise: the general formula is needed
    def ev(u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0, u * u, 2 * u * u)

    def dv(u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0, 2 * u, 4 * u)

    th = make_custom_cost(ev, dv, name="asym")
    f = FUNCTIONS["softplus"]
    x = np.linspace(-2, 2, 21)
    back = hopf_lax(f, th, 1.0, forward_map(f, th, 1.0, x)).minimizer
    np.testing.assert_allclose(back, x, atol=1e-7)


class TestSplit:
    def test_proportional_half_is_f_over_two(self):
        f = FUNCTIONS["softplus"]
        f1, f2 = split_cost(f, split_proportional(MIXED, 0.5))
        y = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(f1.deriv(y), 0.5 * f.deriv(y), atol=1e-9)
        np.testing.assert_allclose(f1(y) - f1(0.0), 0.5 * (f(y) - f(0.0)), atol=1e-9)

    def test_third_of_quadratic(self):
        split = CostSplit(make_power_cost(2, 1 / 3), make_power_cost(2, 2 / 3), SQ)
        f1, _ = split_cost(quadratic(1.0), split, anchor=0.25)
        y = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(f1(y), y ** 2 / 6 + 0.25, atol=1e-9)

    @pytest.mark.parametrize("fname", ["x2/2", "softplus", "x4/4", "smooth_abs"])
    @pytest.mark.parametrize("split", [
        split_sum(make_power_cost(2, 0.5), make_power_cost(4, 0.25)),
        split_proportional(MIXED, 0.3),
        CostSplit(make_power_cost(4, 0.25), complement_cost(MIXED, make_power_cost(4, 0.25)), MIXED),
    ], ids=["u2|u4", "prop", "u4|rest"])
    def test_identity_and_convexity(self, fname, split):
        f = FUNCTIONS[fname]
        f1, f2 = split_cost(f, split)
        x = np.linspace(-2, 2, 21)
        for t in (0.5, 1.0, 2.0):
            lhs = hopf_lax(f, split.theta, t, x).value
            rhs = hopf_lax(f1, split.alpha, t, x).value + hopf_lax(f2, split.beta, t, x).value
            np.testing.assert_allclose(lhs, rhs, atol=1e-6)
        y = np.linspace(-4, 4, 161)
        assert np.all(np.diff(f2.deriv(y)) >= -1e-12)
        assert np.all(np.diff(f1.deriv(y)) >= -1e-12)
        a, b = y[:-1], y[1:]
        assert np.all(f2(b) >= f2(a) + f2.deriv(a) * (b - a) - 1e-9)

    def test_against_grid_oracle(self):
        split = split_sum(make_power_cost(2, 0.5), make_power_cost(4, 0.25))
        f1, f2 = split_cost(quadratic(1.0), split)
        h = 2e-3
        lhs = grid_infconv_oracle(GridFunction.sample(quadratic(1.0).eval, -4, 4, h), MIXED, 1.0)
        q1 = grid_infconv_oracle(GridFunction.sample(f1.eval, -4, 4, h), split.alpha, 1.0)
        q2 = grid_infconv_oracle(GridFunction.sample(f2.eval, -4, 4, h), split.beta, 1.0)
        for x in (-2, -1, 0, 1, 2):
            assert lhs.at(x) == pytest.approx(q1.at(x) + q2.at(x), abs=1e-4)

    def test_bounded_derivative_range_clamps(self):
        # alpha has slopes bounded by 1, so f1 turns affine for large |f'|
        bounded = make_custom_cost(lambda x: np.logaddexp(x, -x) - np.log(2), np.tanh,
                                   superlinear=False, deriv_range=(-1.0, 1.0))
        theta = add_costs(bounded, SQ)
        f1, f2 = split_cost(quartic(), CostSplit(bounded, SQ, theta))
        assert abs(float(f1.deriv(50.0))) <= 1.0
        x = np.linspace(-2, 2, 9)
        lhs = hopf_lax(quartic(), theta, 1.0, x).value
        rhs = hopf_lax(f1, bounded, 1.0, x).value + hopf_lax(f2, SQ, 1.0, x).value
        np.testing.assert_allclose(lhs, rhs, atol=1e-6)


class TestHJ:
    def test_quadratic_residual_first_order(self):
        res = []
        for h in (1e-2, 5e-3):
            ts = np.arange(0.5, 1.5 + h / 2, h)
            xs = np.arange(-2, 2 + h / 2, h)
            res.append(hj_residual(quadratic(1.0), HALF_SQ, ts, xs))
        assert res[0] <= 1e-3
        assert res[0] / res[1] >= 1.8

    def test_linear_exact(self):
        ts = np.linspace(0.5, 1.5, 11)
        xs = np.linspace(-2, 2, 41)
        assert hj_residual(linear(0.7), HALF_SQ, ts, xs) <= 1e-10

    def test_constant(self):
        ts = np.linspace(0.5, 1.5, 5)
        xs = np.linspace(-1, 1, 5)
        assert hj_residual(constant(2.0), MIXED, ts, xs) == 0.0

    def test_non_superlinear_rejected(self):
        bounded = make_custom_cost(lambda x: np.logaddexp(x, -x) - np.log(2), np.tanh,
                                   superlinear=False, deriv_range=(-1.0, 1.0))
        with pytest.raises(CapabilityError):
            hj_residual(quadratic(), bounded, [1, 2, 3], [0, 1, 2])

    def test_grid_shape(self):
        with pytest.raises(ShapeError):
            hj_residual(quadratic(), SQ, [1, 2], [0, 1, 2])


def test_custom_function_wrapper():
    f = from_callables(lambda x: np.exp(x), lambda x: np.exp(x), 0.0, "exp")
    res = hopf_lax(f, SQ, 1.0, 0.0)
    val, _ = scalar_hopf_lax(f, SQ, 1.0, 0.0)
    assert res.value == pytest.approx(val, abs=1e-9)
