import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsdde.fbm import SamplePath, sample_fbm
from fsdde.fractional import (
    IntegralMethod,
    MethodDisagreement,
    RoughnessWarning,
    check_order,
    cross_validate,
    frac_deriv_left,
    frac_deriv_right,
    integral_bound_check,
    lambda_alpha,
    shift_integral_identity_check,
    w_1malpha_inf_norm,
    w_alpha1_norm,
    weyl_norms,
    young_integral,
    young_integral_path,
)
from fsdde.grid import GridAlignmentError, GridFunction, PathGrid
from fsdde.holder import PairBudgetError, holder_seminorm

FF, YS = IntegralMethod.FRACTIONAL_FORMULA, IntegralMethod.YOUNG_SUMS


def linear_driver(n, T=1.0):
    g = PathGrid.over(0, T, n)
    return SamplePath(g, g.times)


def on(path, fun):
    return GridFunction(path.grid, fun(path.times)[:, None])


def test_check_order():
    assert check_order(0.3, 0.8) == 0.3
    with pytest.raises(ValueError):
        check_order(0.1, 0.8)
    with pytest.raises(ValueError):
        check_order(0.5, 0.8)
    with pytest.raises(ValueError):
        check_order(1.2)


@pytest.mark.parametrize("alpha", [0.2, 0.35, 0.45])
def test_left_derivative_of_constant(alpha):
    f = GridFunction.from_callable(PathGrid.over(0, 1, 64), lambda t: np.full_like(t, 2.0))
    got = frac_deriv_left(f, alpha, 0.0, 0.75)[0]
    assert got == pytest.approx(2.0 * 0.75**-alpha / math.gamma(1 - alpha), rel=1e-13)


def test_left_derivative_of_linear_closed_form():
    alpha, a, s = 0.35, 0.0, 1.0
    f = GridFunction.from_callable(PathGrid.over(0, 1, 2**10), lambda u: u - a)
    exact = (s - a) ** (1 - alpha) / math.gamma(2 - alpha)
    assert frac_deriv_left(f, alpha, a, s)[0] == pytest.approx(exact, rel=1e-4)


def test_left_derivative_refinement_on_smooth_function():
    # D^alpha_{0+} u^2 = Gamma(3)/Gamma(3 - alpha) s^{2 - alpha}
    alpha = 0.3
    exact = 2.0 / math.gamma(3 - alpha)
    errs = []
    for n in (32, 64, 128, 256):
        f = GridFunction.from_callable(PathGrid.over(0, 1, n), lambda u: u**2)
        errs.append(abs(frac_deriv_left(f, alpha, 0.0, 1.0)[0] - exact))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_left_derivative_rejects_degenerate_interval():
    f = GridFunction.from_callable(PathGrid.over(0, 1, 8), np.sin)
    with pytest.raises(ValueError):
        frac_deriv_left(f, 0.3, 0.5, 0.5)
    with pytest.raises(GridAlignmentError):
        frac_deriv_left(f, 0.3, 0.0, 0.3)


def test_left_derivative_flags_rough_input():
    g = PathGrid.over(0, 1, 4096)
    rng = np.random.default_rng(0)
    rough = GridFunction(g, rng.standard_normal(g.size)[:, None])
    with pytest.warns(RoughnessWarning):
        frac_deriv_left(rough, 0.45, 0.0, 1.0)


def test_right_derivative_of_zero():
    g = PathGrid.over(0, 1, 32)
    assert frac_deriv_right(SamplePath(g, np.zeros(33)), 0.3, 1.0, 0.25) == 0.0


@pytest.mark.parametrize("alpha,s,t", [(0.3, 0.0, 1.0), (0.35, 0.25, 0.75), (0.45, 0.5, 1.0)])
def test_right_derivative_of_identity(alpha, s, t):
    # independently integrated: -(t-s)^alpha / Gamma(1 + alpha)
    exact = -((t - s) ** alpha) / math.gamma(1 + alpha)
    assert frac_deriv_right(linear_driver(256), alpha, t, s) == pytest.approx(exact, rel=1e-6)


def test_right_derivative_rejects_degenerate_interval():
    with pytest.raises(ValueError):
        frac_deriv_right(linear_driver(8), 0.3, 0.5, 0.5)


@pytest.mark.parametrize("seed", range(3))
def test_sign_anchor(seed):
    w = sample_fbm(0.75, PathGrid.over(0, 1, 512), seed)
    one = on(w, np.ones_like)
    exact = w.values[-1] - w.values[128]
    assert young_integral(one, w, 0.25, 1.0)[0] == pytest.approx(exact, abs=1e-12)
    assert young_integral(one, w, 0.25, 1.0, 0.35, FF)[0] == pytest.approx(exact, abs=5e-3)


def test_riemann_stieltjes_oracle():
    w = linear_driver(1024)
    f = on(w, lambda t: t)
    assert young_integral(f, w, 0.0, 1.0, 0.3, FF)[0] == pytest.approx(0.5, abs=1e-3)
    assert young_integral(f, w, 0.0, 1.0)[0] == pytest.approx(0.5, abs=1e-3)


def test_fractional_formula_needs_alpha():
    w = linear_driver(16)
    with pytest.raises(ValueError):
        young_integral(on(w, np.sin), w, 0.0, 1.0, method=FF)


def test_integral_rejects_reversed_limits():
    w = linear_driver(16)
    with pytest.raises(ValueError):
        young_integral(on(w, np.sin), w, 0.5, 0.5)


def test_cross_validate_agrees_and_raises():
    w = sample_fbm(0.75, PathGrid.over(0, 1, 1024), 4)
    f = on(w, np.sin)
    ff, ys = cross_validate(f, w, 0.0, 1.0, 0.35)
    assert abs(ff[0] - ys[0]) < 1e-2 * max(abs(ys[0]), 1e-1)
    with pytest.raises(MethodDisagreement) as info:
        cross_validate(f, w, 0.0, 1.0, 0.35, rtol=1e-12)
    assert info.value.fractional.shape == info.value.young.shape == (1,)


def test_method_gap_shrinks_under_refinement():
    gaps = []
    for n in (256, 512, 1024):
        w = sample_fbm(0.75, PathGrid.over(0, 1, 2048), 9).coarsen(2048 // n)
        f = on(w, np.sin)
        gaps.append(abs(young_integral(f, w, 0, 1, 0.35, FF)[0] - young_integral(f, w, 0, 1)[0]))
    assert gaps[0] > gaps[1] > gaps[2]


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.floats(-3, 3), st.floats(-3, 3))
def test_young_sums_linear(seed, c1, c2):
    w = sample_fbm(0.7, PathGrid.over(0, 1, 64), seed)
    f1, f2 = on(w, np.sin), on(w, np.cos)
    lhs = young_integral(f1.scale(c1) + f2.scale(c2), w, 0.0, 1.0)
    rhs = c1 * young_integral(f1, w, 0.0, 1.0) + c2 * young_integral(f2, w, 0.0, 1.0)
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-10)


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.integers(1, 62))
def test_young_sums_additive(seed, k):
    w = sample_fbm(0.7, PathGrid.over(0, 1, 64), seed)
    f = on(w, np.cos)
    b = k / 64
    total = young_integral(f, w, 0.0, b) + young_integral(f, w, b, 1.0)
    assert np.allclose(total, young_integral(f, w, 0.0, 1.0), rtol=0, atol=1e-10)


def test_integral_path_matches_pointwise():
    w = sample_fbm(0.7, PathGrid.over(0, 1, 32), 1)
    f = on(w, np.cos)
    path = young_integral_path(f, w)
    assert path.values[0, 0] == 0.0
    assert path.values[20, 0] == pytest.approx(young_integral(f, w, 0.0, 20 / 32)[0], abs=1e-15)


def test_lambda_alpha_and_w_norm_on_identity():
    alpha = 0.3
    w = linear_driver(512)
    expected_lambda = 1.0 / (math.gamma(1 - alpha) * math.gamma(1 + alpha))
    assert lambda_alpha(w, alpha) == pytest.approx(expected_lambda, rel=1e-4)
    assert w_1malpha_inf_norm(w, alpha) == pytest.approx(1 + 1 / alpha, rel=1e-4)


def test_zero_driver_norms():
    g = PathGrid.over(0, 1, 32)
    z = SamplePath(g, np.zeros(33))
    assert lambda_alpha(z, 0.3) == 0.0
    assert w_1malpha_inf_norm(z, 0.3) == 0.0


def test_pair_budget():
    w = sample_fbm(0.7, PathGrid.over(0, 1, 2048), 0)
    with pytest.raises(PairBudgetError):
        lambda_alpha(w, 0.35)
    assert lambda_alpha(w, 0.35, stride=2) > 0


@pytest.mark.parametrize("seed", range(5))
def test_w_norm_dominates_seminorm(seed):
    w = sample_fbm(0.75, PathGrid.over(0, 1, 128), seed)
    assert w_1malpha_inf_norm(w, 0.35) >= holder_seminorm(w.as_function(), 0.65)


def test_w_alpha1_norm_closed_forms():
    g = PathGrid.over(0, 1, 256)
    assert w_alpha1_norm(GridFunction(g, np.zeros((257, 1))), 0.3) == 0.0
    c = GridFunction(g, np.full((257, 1), -1.5))
    assert w_alpha1_norm(c, 0.3) == pytest.approx(1.5 / 0.7, rel=1e-12)


def test_w_alpha1_norm_needs_origin():
    with pytest.raises(ValueError):
        w_alpha1_norm(GridFunction.from_callable(PathGrid.over(-1, 0, 8), np.sin), 0.3)


@pytest.mark.parametrize("seed", range(20))
def test_lambda_alpha_chain(seed):
    w = sample_fbm(0.75, PathGrid.over(0, 1, 128), seed)
    assert weyl_norms(on(w, np.sin), w, 0.35).chain_holds


def test_bound_for_zero_integrand():
    w = sample_fbm(0.75, PathGrid.over(0, 1, 64), 0)
    rep = integral_bound_check(on(w, np.zeros_like), w, 0.35)
    assert rep.integral_sup == rep.middle == rep.right == 0.0
    assert rep.first_holds and rep.second_holds


def test_bound_for_unit_integrand():
    w = sample_fbm(0.75, PathGrid.over(0, 1, 128), 2)
    rep = integral_bound_check(on(w, np.ones_like), w, 0.35)
    assert rep.integral_sup == pytest.approx(np.max(np.abs(w.values)), abs=1e-12)
    assert rep.first_holds and rep.second_holds


def test_shift_identity_examples():
    w = sample_fbm(0.75, PathGrid.over(0, 1, 256), 5)
    f = on(w, lambda t: np.cos(5 * t))
    assert shift_integral_identity_check(f, w, 0.25, 0.75, 0.0) == 0.0
    assert shift_integral_identity_check(on(w, np.ones_like), w, 0.5, 1.0, 0.25) <= 1e-12
    assert shift_integral_identity_check(f, w, 0.25, 0.75, 0.25) <= 1e-10
    with pytest.raises(GridAlignmentError):
        shift_integral_identity_check(f, w, 0.25, 0.75, 0.001)
    with pytest.raises(ValueError):
        shift_integral_identity_check(f, w, 0.25, 0.75, 0.5)
