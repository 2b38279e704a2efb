import numpy as np
import pytest

from distsolve.errors import SingularMatchingSystem
from distsolve.extension import (
    delta_coefficients_from_jumps,
    direct_jumps,
    jump_to_delta_matrix,
    match_extension,
    solve_free_constants,
)
from distsolve.green import build_causal_green
from distsolve.operators import apply_operator
from _support import ONE, X, S, exponential_problem, matern_problem, second_order_problem, even_operator, P_SHIFT
from distsolve.operators import ProblemSpec


def test_exponential_extension():
    p = exponential_problem()
    ext = match_extension(p)
    assert ext.n_free == 0
    F = ext.extension(p.f, p.L)
    x = np.array([-2.0, -0.5, 1.5, 3.0])
    assert np.allclose(F(x), [np.exp(-2.0), np.exp(-0.5), np.exp(-0.5), np.exp(-2.0)])


def test_matern_extension():
    p = matern_problem()
    F = match_extension(p).extension(p.f, p.L)
    x = np.array([-1.3, -0.2])
    assert np.allclose(F(x), (1 - x) * np.exp(x))
    x = np.array([1.2, 2.5])
    assert np.allclose(F(x), (1 + x - 1) * np.exp(-(x - 1)))


def test_free_parameter_count():
    ext = match_extension(second_order_problem())
    assert ext.minus.n_free == 1 and ext.plus.n_free == 1
    Q6 = even_operator([0.7, 1.6, 2.5])
    ext = match_extension(ProblemSpec(Q6, P_SHIFT, ONE + X, 1.3))
    assert ext.minus.n_free == 1 and ext.alpha == 2


@pytest.mark.parametrize("p", [exponential_problem(), matern_problem(), second_order_problem(),
                               ProblemSpec(even_operator([0.7, 1.6, 2.5]), P_SHIFT, S.exponential(0.3) + X * X, 1.3)])
def test_matching_holds_for_any_free_parameters(p):
    ext = match_extension(p)
    rng = np.random.default_rng(0)
    for _ in range(5):
        pvec = rng.normal(size=ext.n_free) * 3
        J0, JL = direct_jumps(p, ext, pvec)
        assert np.all(np.abs(J0[: p.alpha]) <= 1e-10 * (1 + np.abs(pvec).sum()))
        assert np.all(np.abs(JL[: p.alpha]) <= 1e-10 * (1 + np.abs(pvec).sum()))


@pytest.mark.parametrize("p", [matern_problem(), second_order_problem(),
                               ProblemSpec(even_operator([0.7, 1.6, 2.5]), P_SHIFT, S.exponential(0.3) + X * X, 1.3)])
def test_affine_map_equals_direct_jumps(p):
    ext = match_extension(p)
    affine = delta_coefficients_from_jumps(p, ext)
    rng = np.random.default_rng(1)
    for _ in range(5):
        pvec = rng.normal(size=ext.n_free)
        pm, pp = ext.split(pvec)
        a = affine.at(pm, pp)
        J0, JL = direct_jumps(p, ext, pvec)
        assert np.allclose(a.a_minus, jump_to_delta_matrix(p.Q, 0.0, p.n_delta) @ J0, atol=1e-10)
        assert np.allclose(a.a_plus, jump_to_delta_matrix(p.Q, p.L, p.n_delta) @ JL, atol=1e-10)


def test_delta_coefficient_examples():
    p = exponential_problem()
    a = delta_coefficients_from_jumps(p, match_extension(p)).at()
    assert np.allclose(a.a_minus, [1.0]) and np.allclose(a.a_plus, [1.0])
    p = matern_problem()
    a = delta_coefficients_from_jumps(p, match_extension(p)).at()
    assert np.allclose(a.a_minus, [2.0, 1.0]) and np.allclose(a.a_plus, [2.0, -1.0])
    p = matern_problem(f=S.zero())
    a = delta_coefficients_from_jumps(p, match_extension(p)).at()
    assert not np.any(a.a_minus) and not np.any(a.a_plus)


def test_jump_matrix_variable_coefficients():
    """``q(x) delta'(x - s) = q(s) delta' - q'(s) delta``."""
    from distsolve.operators import DifferentialOperator

    q2 = S.exponential(0.5)
    Q = DifferentialOperator((1.0, 0.0, q2))
    T = jump_to_delta_matrix(Q, 0.4, 2)
    # F'' carries J0 delta' + J1 delta
    assert np.allclose(T[:, 0], [-q2.derivative()(0.4), q2(0.4)])
    assert np.allclose(T[:, 1], [q2(0.4), 0.0])


def test_free_constants_zero_data():
    p = second_order_problem(f=S.zero())
    ext = match_extension(p)
    G = build_causal_green(p.P)
    sol = solve_free_constants(G, apply_operator(p.Q, p.f), delta_coefficients_from_jumps(p, ext), p.L, p.n_delta)
    assert np.all(sol.p_minus == 0) and np.all(sol.p_plus == 0)
    assert not np.any(sol.coefficients.a_minus) and not np.any(sol.coefficients.a_plus)


def test_free_constants_m_zero_is_identity():
    p = matern_problem()
    ext = match_extension(p)
    affine = delta_coefficients_from_jumps(p, ext)
    sol = solve_free_constants(build_causal_green(p.P), apply_operator(p.Q, p.f), affine, p.L)
    assert np.array_equal(sol.coefficients.a_minus, affine.a0_minus)


def test_second_order_condition_reported():
    p = second_order_problem()
    ext = match_extension(p)
    sol = solve_free_constants(build_causal_green(p.P), apply_operator(p.Q, p.f),
                               delta_coefficients_from_jumps(p, ext), p.L, p.n_delta)
    assert 1.0 <= sol.condition < 1e3


def test_singular_matching_system_is_reported(monkeypatch):
    import distsolve.extension as extension

    monkeypatch.setattr(extension, "response_matrix", lambda G, site, n: np.zeros((G.m, n)))
    p = second_order_problem()
    ext = match_extension(p)
    with pytest.raises(SingularMatchingSystem):
        solve_free_constants(build_causal_green(p.P), apply_operator(p.Q, p.f),
                             delta_coefficients_from_jumps(p, ext), p.L, p.n_delta)
