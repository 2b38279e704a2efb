"""Shared builders and independent checks used across the test modules."""

import numpy as np

from distsolve import DifferentialOperator, DistributionalSolution, ProblemSpec, SmoothExpression
from distsolve.basis import decaying_basis
from distsolve.expression import COS, NONE, SIN, convolve_causal, definite_convolution
from distsolve.operators import apply_operator, formal_adjoint_apply
from distsolve.oracle import apply_kernel
from distsolve.quadrature import adaptive_gauss_legendre

S = SmoothExpression
X = S.monomial(1)
ONE = S.constant(1.0)

Q_EXP = DifferentialOperator((1.0, 0.0, -1.0))
Q_MATERN = DifferentialOperator((1.0, 0.0, -2.0, 0.0, 1.0))
P_ONE = DifferentialOperator((1.0,))
P_SHIFT = DifferentialOperator((-4.0, 0.0, 1.0))


def exponential_problem(f=ONE, L=1.0):
    return ProblemSpec(Q_EXP, P_ONE, f, L)


def matern_problem(f=ONE, L=1.0):
    return ProblemSpec(Q_MATERN, P_ONE, f, L)


def second_order_problem(f=ONE + X, L=1.0):
    return ProblemSpec(Q_MATERN, P_SHIFT, f, L)


def even_operator(rates):
    """``prod (a^2 - D^2)``; characteristic roots are ``+-a``."""
    q = np.array([1.0])
    for a in rates:
        q = np.convolve(q, [a * a, 0.0, -1.0])
    return DifferentialOperator(tuple(q))


def bump(a, b, K=8):
    """Polynomial bump ``(x-a)^K (b-x)^K``; extended by zero it is C^{K-1}."""
    return ((X - a) ** K) * ((b - X) ** K)


def weak_form_defect(sol, problem, a, b, K=6):
    """``<h, P* psi> - <Q F, psi>`` for a bump supported on ``[a, b]``.

    Independent of the kernel oracle, so it also covers variable coefficients.
    Returns ``(defect, scale)`` where ``scale`` sums the magnitudes of all
    contributions.
    """
    psi = bump(a, b, K)
    Ppsi = formal_adjoint_apply(problem.P, psi)
    L = problem.L
    lo, hi = max(a, 0.0), min(b, L)

    def inside(t):
        return a <= t <= b

    Qf = apply_operator(problem.Q, problem.f)

    def both(t):
        u, v = sol.regular(t) * Ppsi(t), Qf(t) * psi(t)
        return np.stack([u - v, np.abs(u) + np.abs(v)], axis=-1)

    defect, scale = adaptive_gauss_legendre(both, lo, hi) if hi > lo else (0.0, 0.0)
    asm = sol.assembly
    for site, layer, coeffs in ((0.0, sol.delta0, asm.a_minus), (L, sol.deltaL, asm.a_plus)):
        if not inside(site):
            continue
        for k, c in enumerate(layer):
            term = c * (-1) ** k * Ppsi.derivative(k)(site)
            defect, scale = defect + term, scale + abs(term)
        for k, c in enumerate(coeffs):
            term = c * (-1) ** k * psi.derivative(k)(site)
            defect, scale = defect - term, scale + abs(term)
    return float(defect), float(scale)


# -- manufactured solutions ---------------------------------------------------

def random_manufactured(rng):
    """Random admissible (Q, P, L) and a known minimal-singularity h.

    Characteristic rates are kept at least 0.75 apart and the exponential in
    h at least 0.3 away from them, so the refit of f below stays well posed.
    """
    n = int(rng.choice([2, 4, 6]))
    m = int(rng.choice([0, 2])) if n > 2 else 0
    rates = np.cumsum(np.concatenate([[rng.uniform(0.5, 1.5)], rng.uniform(0.75, 1.5, n // 2 - 1)]))
    Q = even_operator(rates)
    P = P_ONE if m == 0 else DifferentialOperator((-rng.uniform(0.5, 5.0), 0.0, 1.0))
    L = float(rng.uniform(1.0, 2.0))
    alpha = (n - m) // 2
    b = rng.uniform(-2.0, 2.0)
    while np.min(np.abs(abs(b) - rates)) < 0.3:
        b = rng.uniform(-2.0, 2.0)
    regular = (
        S.constant(rng.normal())
        + X.scale(rng.normal())
        + S.exponential(b, rng.normal())
        + S.term(rng.normal(), 0, 0.0, COS, rng.uniform(0.5, 4.0))
    )
    h = DistributionalSolution(L, alpha, rng.normal(size=alpha), rng.normal(size=alpha),
                               np.array([0.0, L]), np.zeros(2), regular)
    return Q, P, L, h


def exact_rhs(kernel, h):
    """``R h`` in closed form through causal convolutions of the two kernel halves."""
    Rp, Rm, L, reg = kernel.right, kernel.left, h.L, h.expression
    f = convolve_causal(Rp, reg, 0.0) + definite_convolution(Rm, reg, 0.0, L) - convolve_causal(Rm, reg, 0.0)
    for k, c in enumerate(h.delta0):
        f = f + Rp.derivative(k).scale(c)
    for k, c in enumerate(h.deltaL):
        f = f + Rm.derivative(k).shift(L).scale(c)
    return f


def refit_rhs(kernel, h, Q, samples=400):
    """Sample ``R h`` with the oracle and least-squares fit it in the closed family.

    The span is the terms of h's regular part (with lower powers and both
    trig phases) plus the decaying solutions of Q on each side.
    """
    L = h.L
    seen = {}
    for t in h.expression.terms:
        trigs = (NONE,) if t.trig == NONE else (COS, SIN)
        for p in range(t.power + 1):
            for tr in trigs:
                e = S.term(1.0, p, t.exp_rate, tr, t.trig_freq)
                seen.setdefault(e.terms[0].key(), e)
    cols = list(seen.values())
    cols += list(decaying_basis(Q, "left").expressions) + list(decaying_basis(Q, "right", anchor=L).expressions)
    x = 0.5 * L * (1.0 - np.cos(np.linspace(0.0, np.pi, samples)))
    fx = apply_kernel(kernel, h, x)
    A = np.stack([c(x) for c in cols], axis=1)
    scale = np.max(np.abs(A), axis=0)
    coef = np.linalg.lstsq(A / scale, fx, rcond=None)[0] / scale
    f = S.zero()
    for c, e in zip(coef, cols):
        f = f + e.scale(c)
    return f, float(np.max(np.abs(A @ coef - fx)))
