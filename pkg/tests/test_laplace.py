import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collar_bergman.collar import CollarParams, maximizer_t, t_of_u
from collar_bergman.laplace import (
    concave_tail_bound,
    concentration_bound,
    laplace_estimate,
    maximize_concave,
    window_mass_fraction,
)
from collar_bergman.quadrature import integrate_log_halfline


def test_maximize_linear_derivative():
    assert maximize_concave(lambda t: -2 * t, -1.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_maximize_punctured_exponent():
    k, a = 3, 2
    tau = maximize_concave(lambda s: -2 * a + 2 * k / s, 0.1, 50.0)
    assert tau == pytest.approx(1.5, rel=1e-12)


def test_maximize_collar_exponent():
    p = CollarParams(1e-3, 3)
    t_star = maximizer_t(p, 1)
    assert math.asinh(1 / (3 * 1e-3)) == pytest.approx(6.5023, abs=1e-4)
    assert t_star == pytest.approx(t_of_u(1e-3, math.asinh(1 / (3e-3))), rel=1e-12)


def test_maximize_not_bracketed():
    with pytest.raises(ValueError):
        maximize_concave(lambda t: -2 * t, 1.0, 2.0)


@given(st.floats(min_value=-1e6, max_value=1e6))
def test_maximize_ignores_constant_shift(c):
    g = lambda t: c - (t - 0.3) ** 2
    dg = lambda t: -2 * (t - 0.3)  # the derivative does not see c
    assert maximize_concave(dg, -4.0, 5.0) == maximize_concave(lambda t: -2 * (t - 0.3), -4.0, 5.0)
    assert g(0.3) == c


@settings(max_examples=50)
@given(st.floats(min_value=0.01, max_value=100.0), st.floats(min_value=-5, max_value=5))
def test_laplace_exact_for_quadratics(s, m):
    res = laplace_estimate(lambda t: -s * (t - m) ** 2, lambda t: -2 * s, m)
    assert abs(math.expm1(res.estimate.logmag - 0.5 * math.log(math.pi / s))) <= 1e-12


def test_gaussian_estimate_is_sqrt_pi():
    res = laplace_estimate(lambda t: -t * t, lambda t: -2.0, 0.0)
    assert float(res.estimate) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert float(res.printed_estimate) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-15)


def test_gamma_type_estimate():
    g = lambda s: -2 * s + 4 * math.log(s)
    g2 = lambda s: -4 / s ** 2
    res = laplace_estimate(g, g2, 2.0, dg=lambda s: -2 + 4 / s, halfwidth=1.5)
    assert float(res.estimate) == pytest.approx(16 * math.exp(-4) * math.sqrt(2 * math.pi), rel=1e-14)
    assert float(res.estimate) == pytest.approx(0.73457, abs=1e-5)
    assert float(res.estimate) / 0.75 == pytest.approx(0.9793, abs=2e-4)
    assert res.left_tail is not None and res.right_tail is not None


def test_not_concave_rejected():
    with pytest.raises(ValueError):
        laplace_estimate(lambda t: t * t, lambda t: 2.0, 0.0)


def test_tail_bound_linear_is_exact():
    bound = concave_tail_bound(-2.0, -2.0)
    tail = integrate_log_halfline(lambda t: -2 * t, lambda t: -2.0, 1.0)
    assert float(bound) == pytest.approx(math.exp(-2) / 2, rel=1e-15)
    assert float(bound) == pytest.approx(float(tail), rel=1e-12)


def test_tail_bound_quadratic():
    bound = concave_tail_bound(-1.0, -2.0)
    tail = integrate_log_halfline(lambda t: -t * t, lambda t: -2 * t, 1.0)
    assert float(bound) == pytest.approx(0.18394, abs=1e-5)
    assert float(tail) == pytest.approx(0.13940, abs=1e-5)
    assert float(tail) == pytest.approx(math.sqrt(math.pi) / 2 * math.erfc(1.0), rel=1e-12)
    assert bound > tail


def test_tail_bound_needs_negative_slope():
    with pytest.raises(ValueError):
        concave_tail_bound(0.0, 0.0)


def test_window_covering_everything():
    frac = window_mass_fraction(lambda t: -t * t, 0.0, 40.0, dlogf=lambda t: -2 * t)
    assert frac == pytest.approx(1.0, abs=1e-12)


def test_window_erf():
    frac = window_mass_fraction(lambda t: -t * t, 0.0, 1.0, dlogf=lambda t: -2 * t)
    assert frac == pytest.approx(math.erf(1.0), rel=1e-12)
    assert frac == pytest.approx(0.842701, abs=1e-6)


def test_window_punctured_k6():
    k, a = 6, 1
    logf = lambda s: 2 * k * np.log(s) - 2 * a * s
    dlogf = lambda s: 2 * k / s - 2 * a
    hw = math.sqrt(6) * math.log(6)
    assert hw == pytest.approx(4.389, abs=1e-3)
    frac = window_mass_fraction(logf, 6.0, hw, dlogf=dlogf, lo=0.0)
    assert 1 - frac <= concentration_bound(6)


def test_window_monotone_in_halfwidth():
    widths = np.linspace(0.1, 6.0, 25)
    fr = [window_mass_fraction(lambda t: -t * t + np.log1p(t * t), 0.2, float(w),
                               dlogf=lambda t: -2 * t + 2 * t / (1 + t * t)) for w in widths]
    assert all(b >= a for a, b in zip(fr, fr[1:]))
