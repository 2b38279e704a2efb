import math

import numpy as np
import pytest

from distsolve.errors import ExpressionParseError
from distsolve.parsing import parse_expression, tokenize, uses_parameter

X = np.linspace(-0.5, 1.5, 9)


@pytest.mark.parametrize(
    "text, ref",
    [
        ("1 + x", lambda x: 1 + x),
        ("2*x^2*exp(-x)*cos(3*x + 1)", lambda x: 2 * x**2 * np.exp(-x) * np.cos(3 * x + 1)),
        ("cosh(2*x)/4 - sinh(x)", lambda x: np.cosh(2 * x) / 4 - np.sinh(x)),
        ("sin(pi*x)", lambda x: np.sin(np.pi * x)),
        ("-(x - 1)**2", lambda x: -((x - 1) ** 2)),
        ("exp(0.5*(x + 2))", lambda x: np.exp(0.5 * (x + 2))),
        ("3e-1 * x", lambda x: 0.3 * x),
        ("+-+x", lambda x: -x),
    ],
)
def test_grammar_evaluates(text, ref):
    assert np.allclose(parse_expression(text)(X), ref(X), rtol=1e-13, atol=1e-13)


def test_parameter_substitution():
    e = parse_expression("exp(-z*x) + z", z=0.25)
    assert np.allclose(e(X), np.exp(-0.25 * X) + 0.25)
    assert uses_parameter("1 + z*x") and not uses_parameter("exp(x)")


@pytest.mark.parametrize(
    "text, position",
    [
        ("1 +", 3),
        ("x / x", 4),
        ("exp(x^2)", 4),
        ("foo(x)", 0),
        ("1 $ 2", 2),
        ("x^1.5", 2),
        ("", 0),
        ("(1 + x", 6),
        ("cos(exp(x))", 4),
        ("1 + z", 4),
        ("x x", 2),
        ("x / 0", 4),
    ],
)
def test_errors_report_exact_position(text, position):
    with pytest.raises(ExpressionParseError) as info:
        parse_expression(text)
    assert info.value.position == position


def test_tokens_carry_offsets():
    toks = tokenize("  exp( 2*x )")
    assert [(t.text, t.pos) for t in toks[:3]] == [("exp", 2), ("(", 5), ("2", 7)]


def test_cos_phase_is_exact():
    e = parse_expression("cos(2*x + 0.7)")
    assert math.isclose(e(0.3), math.cos(1.3), rel_tol=1e-15)
