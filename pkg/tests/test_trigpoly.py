import math

import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavereg._xprec import working_precision
from wavereg.trigpoly import (
    CosinePoly,
    DivisibilityError,
    coeffs_from_samples,
    derivative_eval,
    divide_by_half_raised,
    divide_by_linear,
    evaluate,
    half_raised,
    minimum_on_interval,
    multiply,
    samples,
    value_and_derivative,
)

coeff = st.floats(-1, 1, allow_nan=False)
angle = st.floats(-10, 10, allow_nan=False)


# coefficients well above the absolute trim tolerance, so products are not trimmed
sizable = coeff.filter(lambda x: x == 0 or abs(x) > 1e-6)


def poly_strategy(max_degree, elements=coeff):
    return st.lists(elements, min_size=1, max_size=max_degree + 1).map(np.array)


def naive(b, xi):
    return sum(bk * math.cos(k * xi) for k, bk in enumerate(b))


# -- construction ---------------------------------------------------------


def test_trailing_zeros_trimmed():
    p = CosinePoly([1.0, 2.0, 1e-15, 0.0])
    assert p.degree == 1


def test_trim_disabled_keeps_tiny_top():
    assert CosinePoly([1.0, 1e-20], trim=False).degree == 1


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        CosinePoly([1.0, float("nan")])


# -- evaluation -----------------------------------------------------------


def test_eval_haar_at_zero():
    assert evaluate(CosinePoly([0.5, 0.5]), 0.0) == pytest.approx(1.0, abs=1e-15)


def test_eval_r_at_pi_vanishes():
    assert evaluate(CosinePoly([0.75, 0.5, -0.25]), math.pi) == pytest.approx(0.0, abs=1e-15)


def test_eval_daubechies4_at_half_pi():
    assert evaluate(CosinePoly([0.5, 9 / 16, 0, -1 / 16]), math.pi / 2) == pytest.approx(0.5, abs=1e-15)


def test_derivative_examples():
    assert derivative_eval(CosinePoly([0.3, 0.2, 0.1]), 0.0) == pytest.approx(0.0, abs=1e-15)
    assert derivative_eval(CosinePoly([0.0, 1.0]), math.pi / 2) == pytest.approx(-1.0, abs=1e-15)
    assert derivative_eval(CosinePoly([0.75, 0.5, -0.25]), math.pi) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(poly_strategy(100), angle)
def test_eval_matches_naive_sum(b, xi):
    scale = np.sum(np.abs(b))
    assert abs(evaluate(CosinePoly(b, trim=False), xi) - naive(b, xi)) <= 1e-13 * scale + 1e-300


@settings(max_examples=200, deadline=None)
@given(poly_strategy(30), angle)
def test_derivative_matches_finite_difference(b, xi):
    p = CosinePoly(b)
    h = 1e-6
    fd = (evaluate(p, xi + h) - evaluate(p, xi - h)) / (2 * h)
    assert abs(derivative_eval(p, xi) - fd) <= 1e-5


def test_extended_evaluation_is_exact_to_working_precision():
    with working_precision(50):
        b = np.array([gmpy2.mpfr(1) / 3, gmpy2.mpfr(1) / 7, -gmpy2.mpfr(2) / 9], dtype=object)
        x = gmpy2.mpfr(1) / 5
        v = evaluate(CosinePoly(b), x)
        exact = b[0] + b[1] * gmpy2.cos(x) + b[2] * gmpy2.cos(2 * x)
        assert abs(v - exact) < gmpy2.mpfr(10) ** -45


# -- products and division ------------------------------------------------


def test_multiply_identity_and_square():
    q = CosinePoly([0.2, -0.4, 0.7])
    np.testing.assert_allclose(multiply(CosinePoly([1.0]), q).coeffs, q.coeffs)
    np.testing.assert_allclose(multiply(CosinePoly([0.5, 0.5]), CosinePoly([0.5, 0.5])).coeffs, [3 / 8, 1 / 2, 1 / 8])


def test_multiply_reconstructs_daubechies4():
    p = multiply(half_raised(2), CosinePoly([2.0, -1.0]))
    np.testing.assert_allclose(p.coeffs, [0.5, 9 / 16, 0, -1 / 16], atol=1e-16)


def test_divide_examples():
    q, rem = divide_by_half_raised(CosinePoly([0.5, 0.5]), 1)
    np.testing.assert_allclose(q.coeffs, [1.0])
    assert rem == 0
    d4 = CosinePoly([0.5, 9 / 16, 0, -1 / 16])
    q, rem = divide_by_half_raised(d4, 2)
    np.testing.assert_allclose(q.coeffs, [2.0, -1.0], atol=1e-15)
    assert rem <= 1e-12
    q, _ = divide_by_half_raised(d4, 1)
    np.testing.assert_allclose(q.coeffs, [0.75, 0.5, -0.25], atol=1e-15)


def test_divide_too_far_raises():
    with pytest.raises(DivisibilityError):
        divide_by_half_raised(CosinePoly([0.5, 9 / 16, 0, -1 / 16]), 3)


def _padded_diff(a, b):
    n = max(a.size, b.size)
    return np.max(np.abs(np.pad(a, (0, n - a.size)) - np.pad(b, (0, n - b.size))))


@settings(max_examples=60, deadline=None)
@given(poly_strategy(35, sizable), st.integers(1, 20))
def test_divide_inverts_multiply_extended(b, M):
    with working_precision(40):
        q = CosinePoly(np.array([gmpy2.mpfr(float(x)) for x in b], dtype=object))
        back, _ = divide_by_half_raised(multiply(half_raised(M, extended=True), q), M)
    assert _padded_diff(back.astype_float().coeffs, q.astype_float().coeffs) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(poly_strategy(35, sizable), st.integers(1, 2))
def test_divide_inverts_multiply_float(b, M):
    # float rounding noise in the product has no zero at pi; dividing it out
    # amplifies it like eps * d^(2M), so the float identity is checked for small M
    q = CosinePoly(b)
    back, _ = divide_by_half_raised(multiply(half_raised(M), q), M)
    assert _padded_diff(back.coeffs, q.coeffs) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(poly_strategy(20), st.floats(-0.99, 0.99))
def test_divide_by_linear_round_trip(b, t):
    # Chebyshev form: p(x) = q(x)(x - t) + rem with rem = p(t)
    q, rem = divide_by_linear(list(b), t)
    p_t = np.polynomial.chebyshev.chebval(t, b)
    assert abs(rem - p_t) <= 1e-12 * (1 + np.sum(np.abs(b)))
    for x in (-0.7, 0.1, 0.9):
        lhs = np.polynomial.chebyshev.chebval(x, b)
        rhs = np.polynomial.chebyshev.chebval(x, q) * (x - t) + rem
        assert abs(lhs - rhs) <= 1e-11 * (1 + np.sum(np.abs(b)))


def test_value_and_derivative_in_x():
    # p(x) = T_2(x) = 2x^2 - 1
    v, dv = value_and_derivative([0.0, 0.0, 1.0], 0.3)
    assert v == pytest.approx(2 * 0.09 - 1)
    assert dv == pytest.approx(4 * 0.3)


# -- sampling -------------------------------------------------------------


def test_coeffs_from_samples_examples():
    np.testing.assert_allclose(coeffs_from_samples(np.full(7, 2.5)).coeffs, [2.5], atol=1e-15)
    np.testing.assert_allclose(coeffs_from_samples(np.cos(np.arange(5) * np.pi / 4)).coeffs, [0, 1], atol=1e-15)
    p = CosinePoly([2.0, -1.0])
    np.testing.assert_allclose(coeffs_from_samples(samples(p, 1)).coeffs, p.coeffs, atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(poly_strategy(40))
def test_sample_round_trip(b):
    p = CosinePoly(b, trim=False)
    back = coeffs_from_samples(samples(p, p.degree)).coeffs
    np.testing.assert_allclose(np.pad(back, (0, b.size - back.size)), b, atol=1e-12)


# -- minimum --------------------------------------------------------------


def test_minimum_examples():
    x, v = minimum_on_interval(CosinePoly([1.0]), 0, math.pi)
    assert v == 1.0
    x, v = minimum_on_interval(CosinePoly([0.75, 0.5, -0.25]), 0, math.pi)
    assert v == pytest.approx(0.0, abs=1e-12)
    assert x == pytest.approx(math.pi, abs=1e-6)


def test_minimum_finds_narrow_dip():
    # (cos xi - cos z)^2 - eps has a dip narrower than the sampling step
    z, eps = 2.6464, 3.7e-5
    c = math.cos(z)
    p = CosinePoly([c * c + 0.5 - eps, -2 * c, 0.5])
    x, v = minimum_on_interval(p, 0, math.pi)
    assert v == pytest.approx(-eps, abs=1e-12)
    assert x == pytest.approx(z, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(poly_strategy(15))
def test_minimum_not_above_dense_grid(b):
    p = CosinePoly(b)
    _, v = minimum_on_interval(p, 0, math.pi)
    grid = evaluate(p, np.linspace(0, math.pi, 20001))
    assert v <= grid.min() + 1e-11 * max(p.scale(), 1.0)
