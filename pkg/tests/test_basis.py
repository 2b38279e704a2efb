import numpy as np
import pytest

from distsolve.basis import ClosedFormBasis, NumericBasis, decaying_basis, fundamental_system, wronskian
from distsolve.errors import DichotomyViolation, OrderOutOfRange, ValidationError, VariableCoefficientQUnsupported
from distsolve.expression import SmoothExpression
from distsolve.operators import DifferentialOperator
from _support import Q_EXP, Q_MATERN, X

S = SmoothExpression
D2 = DifferentialOperator((0.0, 0.0, 1.0))
D2P1 = DifferentialOperator((1.0, 0.0, 1.0))
D2M4 = DifferentialOperator((-4.0, 0.0, 1.0))
xs = np.linspace(-1.0, 2.0, 31)


@pytest.mark.parametrize(
    "P, refs",
    [
        (D2, [lambda x: np.ones_like(x), lambda x: x]),
        (D2P1, [np.cos, np.sin]),
        (D2M4, [lambda x: np.cosh(2 * x), lambda x: np.sinh(2 * x) / 2]),
    ],
)
def test_fundamental_system_examples(P, refs):
    basis = fundamental_system(P)
    for e, ref in zip(basis.expressions, refs):
        assert np.allclose(e(xs), ref(xs), atol=1e-13)
    assert wronskian(basis, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_identity_cauchy_data_at_anchor():
    P = DifferentialOperator((3.0, -1.0, 2.0, 0.5, 1.0))
    basis = fundamental_system(P, anchor=0.7)
    assert np.allclose(basis.derivative_matrix(0.7), np.eye(4), atol=1e-12)


@pytest.mark.parametrize("P", [D2, D2P1, D2M4, DifferentialOperator((2.0, 1.0, -3.0, 0.0, 1.0))])
def test_numeric_basis_matches_closed_form(P):
    closed = fundamental_system(P)
    numeric = fundamental_system(P, domain=(-1.0, 2.0), force_numeric=True)
    assert isinstance(numeric, NumericBasis)
    k = P.order + 2
    a, b = closed.derivatives(xs, k), numeric.derivatives(xs, k)
    assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))) <= 1e-8


def test_numeric_basis_variable_coefficients():
    P = DifferentialOperator((S.constant(-2.0) + S.term(0.5, 0, 0.0, 1, 3.0), X * 0.3, 1.0))
    basis = fundamental_system(P, domain=(-1.0, 2.0))
    D = basis.derivatives(xs, 3)
    p0 = -2.0 + 0.5 * np.cos(3 * xs)
    res = D[:, 2, :] + 0.3 * xs[:, None] * D[:, 1, :] + p0[:, None] * D[:, 0, :]
    assert np.max(np.abs(res)) <= 1e-8 * np.max(np.abs(D))
    with pytest.raises(ValidationError):
        basis.derivatives(np.array([5.0]), 1)


def test_fundamental_system_needs_order_two():
    with pytest.raises(OrderOutOfRange):
        fundamental_system(DifferentialOperator((1.0,)))


def test_wronskian_examples():
    assert wronskian(ClosedFormBasis([S.term(1.0, 0, 0.0, 1, 1.0), S.term(1.0, 0, 0.0, 2, 1.0)]), 0.83) == pytest.approx(1.0)
    assert wronskian(ClosedFormBasis([S.constant(1.0), X]), -2.0) == pytest.approx(1.0)
    assert wronskian(ClosedFormBasis([S.exponential(-1.0), X * S.exponential(-1.0)]), 0.0) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "Q, side, refs",
    [
        (Q_EXP, "right", [lambda x: np.exp(-x)]),
        (Q_MATERN, "right", [lambda x: np.exp(-x), lambda x: x * np.exp(-x)]),
        (Q_MATERN, "left", [lambda x: np.exp(x), lambda x: x * np.exp(x)]),
    ],
)
def test_decaying_basis_examples(Q, side, refs):
    basis = decaying_basis(Q, side)
    assert basis.size == len(refs)
    for e, ref in zip(basis.expressions, refs):
        assert np.allclose(e(xs), ref(xs))


def test_decaying_basis_oscillatory_roots():
    Q = DifferentialOperator((5.0, 0.0, 2.0, 0.0, 1.0))  # roots +-1 +- 2i
    right = decaying_basis(Q, "right", anchor=1.0)
    t = np.linspace(1.0, 30.0, 50)
    for e in right.expressions:
        assert abs(e(30.0)) < 1e-10
    assert right.residual(Q, 1.0, 3.0) < 1e-12


def test_dichotomy_violation():
    with pytest.raises(DichotomyViolation):
        decaying_basis(DifferentialOperator((1.0, 0.0, 1.0)), "right")


def test_custom_basis_hook():
    Q = DifferentialOperator((S.exponential(1.0), 0.0, S.exponential(1.0).scale(-1.0)))
    with pytest.raises(VariableCoefficientQUnsupported):
        decaying_basis(Q, "right")
    basis = decaying_basis(Q, "right", custom=[S.exponential(-1.0)])
    assert basis.size == 1
    with pytest.raises(ValidationError):
        decaying_basis(Q, "right", custom=[S.exponential(-2.0)])
    with pytest.raises(ValidationError):
        decaying_basis(Q, "right", custom=[S.exponential(-1.0), X])
