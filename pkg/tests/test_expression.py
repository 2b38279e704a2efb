import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distsolve.expression import COS, NONE, SIN, SmoothExpression, convolve_causal, definite_convolution
from distsolve.quadrature import adaptive_gauss_legendre

S = SmoothExpression
PTS = np.array([-0.7, -0.1, 0.3, 0.9, 1.4])

coeffs = st.floats(-3.0, 3.0, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
terms = st.tuples(
    coeffs,
    st.integers(0, 3),
    st.one_of(st.just(0.0), st.floats(0.05, 2.0), st.floats(-2.0, -0.05)),
    st.sampled_from([NONE, COS, SIN]),
    st.floats(0.1, 4.0, allow_nan=False),
)
expressions = st.lists(terms, min_size=1, max_size=4).map(lambda ts: S(tuple(ts)))


def central_difference(e, x, h=1e-5):
    return (e(x + h) - e(x - h)) / (2 * h)


@settings(max_examples=60, deadline=None)
@given(expressions)
def test_derivative_matches_finite_differences(e):
    d = e.derivative()(PTS)
    fd = central_difference(e, PTS)
    scale = np.maximum(np.abs(d), np.max(np.abs(e(PTS))) + 1.0)
    assert np.all(np.abs(d - fd) <= 1e-6 * scale)


@settings(max_examples=40, deadline=None)
@given(expressions, expressions)
def test_product_rule(u, v):
    lhs = (u * v).derivative()(PTS)
    rhs = (u.derivative() * v + u * v.derivative())(PTS)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(expressions)
def test_antiderivative_inverts_derivative(e):
    assert np.allclose(e.antiderivative().derivative()(PTS), e(PTS), rtol=1e-10, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(expressions, st.floats(-1.5, 1.5))
def test_shift_translates(e, s):
    assert np.allclose(e.shift(s)(PTS), e(PTS - s), rtol=1e-9, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(expressions)
def test_separation_reproduces_difference_argument(e):
    x, y = 0.8, -0.35
    total = sum(A(x) * B(y) for A, B in e.separate())
    assert math.isclose(total, e(x - y), rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=30, deadline=None)
@given(expressions)
def test_list_round_trip(e):
    assert S.from_list(e.to_list()) == e


def test_noise_rates_snap_to_zero():
    e = S.term(1.0, 1, 1e-250, NONE, 0.0)
    assert e == S.monomial(1)
    assert np.allclose(e.antiderivative()(PTS), PTS**2 / 2)


def test_like_terms_merge_and_cancel():
    e = S.term(2.0, 1, 0.5, COS, 3.0) + S.term(-2.0, 1, 0.5, COS, 3.0)
    assert e.is_zero()
    assert len((S.constant(1.0) + S.constant(2.0)).terms) == 1


def test_negative_frequency_is_canonicalized():
    assert S.term(1.0, 0, 0.0, SIN, -2.0) == S.term(-1.0, 0, 0.0, SIN, 2.0)
    assert S.term(1.0, 0, 0.0, COS, -2.0) == S.term(1.0, 0, 0.0, COS, 2.0)


def test_trig_product_identities():
    c, s = S.term(1.0, 0, 0.0, COS, 2.0), S.term(1.0, 0, 0.0, SIN, 3.0)
    x = np.linspace(-2, 2, 9)
    assert np.allclose((c * s)(x), np.cos(2 * x) * np.sin(3 * x))
    assert np.allclose((s * s)(x), np.sin(3 * x) ** 2)


def test_integrate_against_quadrature():
    e = S.term(1.5, 2, -0.7, SIN, 2.5) + S.monomial(3)
    ref = adaptive_gauss_legendre(e, -0.3, 1.7)
    assert math.isclose(e.integrate(-0.3, 1.7), ref, rel_tol=1e-12)


def test_causal_convolution_closed_form():
    k = S.exponential(-1.0)
    rhs = S.monomial(1)
    conv = convolve_causal(k, rhs, 0.0)
    # int_0^x e^{-(x-y)} y dy = x - 1 + e^{-x}
    x = np.linspace(0, 2, 7)
    assert np.allclose(conv(x), x - 1 + np.exp(-x), atol=1e-14)
    full = definite_convolution(k, rhs, 0.0, 1.0)
    assert np.allclose(full(x), np.exp(-x) * 1.0, atol=1e-14)  # int_0^1 e^{y} y dy = 1


def test_pow_rejects_fractional():
    with pytest.raises(ValueError):
        S.monomial(1) ** 1.5


def test_scalar_and_array_evaluation_agree():
    e = S.term(1.0, 1, 0.3, COS, 1.0)
    assert isinstance(e(0.5), float)
    assert e(0.5) == e(np.array([0.5]))[0]
