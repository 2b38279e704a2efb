"""Fundamental systems of solutions and half-line decaying bases."""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DichotomyViolation,
    IntegrationFailure,
    OrderOutOfRange,
    ValidationError,
    VariableCoefficientQUnsupported,
)
from .expression import COS, NONE, SIN, SmoothExpression
from .operators import (
    DifferentialOperator,
    apply_operator,
    characteristic_roots,
    dichotomy_check,
)

RTOL = 1e-10
ATOL = 1e-12


class SolutionBasis:
    """A finite set of solutions of a homogeneous linear ODE.

    Subclasses provide :meth:`derivatives`, returning ``D[..., k, j]`` =
    ``phi_j^{(k)}(x)``.
    """

    anchor = 0.0
    expressions = None

    @property
    def size(self):
        raise NotImplementedError

    def derivatives(self, x, nderiv):
        raise NotImplementedError

    def derivative_matrix(self, x, nderiv=None):
        nderiv = self.size if nderiv is None else nderiv
        return self.derivatives(np.array([float(x)]), nderiv)[0]

    def combine(self, coeffs, x, order=0):
        """``sum_j coeffs[j] phi_j^{(order)}(x)`` on an array of points."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        D = self.derivatives(x, order + 1)[:, order, :]
        return D @ np.asarray(coeffs, dtype=float)


class ClosedFormBasis(SolutionBasis):
    def __init__(self, expressions, anchor=0.0):
        self.expressions = tuple(expressions)
        self.anchor = float(anchor)
        self._deriv_cache = {0: self.expressions}

    @property
    def size(self):
        return len(self.expressions)

    def _deriv(self, k):
        if k not in self._deriv_cache:
            self._deriv_cache[k] = tuple(e.derivative() for e in self._deriv(k - 1))
        return self._deriv_cache[k]

    def derivatives(self, x, nderiv):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((x.size, nderiv, self.size))
        for k in range(nderiv):
            for j, e in enumerate(self._deriv(k)):
                out[:, k, j] = e(x)
        return out

    def residual(self, op: DifferentialOperator, lo, hi, samples=201):
        """Max relative residual of ``op`` applied to each element."""
        xs = np.linspace(lo, hi, samples)
        worst = 0.0
        for e in self.expressions:
            r = np.max(np.abs(apply_operator(op, e)(xs)))
            scale = max(
                np.max(np.abs(op.coeff_expr(j)(xs) * e.derivative(j)(xs))) for j in range(op.order + 1)
            )
            worst = max(worst, r / max(scale, 1e-300))
        return worst


class NumericBasis(SolutionBasis):
    """Cauchy-problem solutions of ``P phi = 0`` by adaptive DOP853.

    ``phi_j^{(k)}(anchor) = delta_{jk}``. Derivatives of order >= m are
    recovered from the equation itself (Leibniz recursion on exact
    coefficient derivatives).
    """

    def __init__(self, P: DifferentialOperator, anchor, domain, rtol=RTOL, atol=ATOL):
        self.P = P
        self.anchor = float(anchor)
        self.domain = (float(domain[0]), float(domain[1]))
        m = P.order
        self._m = m
        lead = P.leading
        if not isinstance(lead, float):
            raise ValidationError("numeric basis requires a constant leading coefficient")
        self._lead = lead

        def rhs(x, y):
            Y = y.reshape(m, m)
            out = np.empty_like(Y)
            out[:-1] = Y[1:]
            p = P.coeff_values(x)[:, 0]
            out[-1] = -(p[:m] @ Y) / lead
            return out.ravel()

        y0 = np.eye(m).ravel()
        self._segments = []
        lo, hi = self.domain
        for end in (lo, hi):
            if end == self.anchor:
                continue
            sol = solve_ivp(
                rhs, (self.anchor, end), y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True
            )
            if not sol.success:
                raise IntegrationFailure(f"basis integration failed: {sol.message}")
            self._segments.append((min(self.anchor, end), max(self.anchor, end), sol.sol))

    @property
    def size(self):
        return self._m

    def _state(self, x):
        out = np.empty((x.size, self._m, self._m))
        done = np.zeros(x.size, dtype=bool)
        tol = 1e-12 * max(1.0, abs(self.domain[1] - self.domain[0]))
        for lo, hi, sol in self._segments:
            sel = (~done) & (x >= lo - tol) & (x <= hi + tol)
            if np.any(sel):
                out[sel] = sol(x[sel]).T.reshape(-1, self._m, self._m)
                done |= sel
        at_anchor = (~done) & (x == self.anchor)
        out[at_anchor] = np.eye(self._m)
        done |= at_anchor
        if not np.all(done):
            raise ValidationError(f"point outside the integrated domain {self.domain}")
        return out

    def derivatives(self, x, nderiv):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        m = self._m
        state = self._state(x)
        out = np.empty((x.size, max(nderiv, m), m))
        out[:, :m, :] = state
        # v^{(m+r)} = -(1/p_m) sum_{l<m} sum_{t<=r} C(r,t) p_l^{(r-t)} v^{(l+t)}
        for r in range(max(0, nderiv - m)):
            acc = np.zeros((x.size, m))
            for l in range(m):
                for t in range(r + 1):
                    c = self.P.coeffs[l]
                    if isinstance(c, float):
                        if r - t:
                            continue
                        pv = np.full(x.size, c)
                    else:
                        pv = c.derivative(r - t)(x)
                    acc += math.comb(r, t) * pv[:, None] * out[:, l + t, :]
            out[:, m + r, :] = -acc / self._lead
        return out[:, :nderiv, :]


def _raw_exponential_basis(roots, anchor):
    """``(x-a)^k e^{lam (x-a)}`` in real form for each root of multiplicity mu."""
    raw = []
    for lam, mu in roots:
        if lam.imag < 0:
            continue
        for k in range(mu):
            if lam.imag == 0:
                e = SmoothExpression.term(1.0, k, lam.real, NONE, 0.0)
                raw.append(e.shift(anchor))
            else:
                raw.append(SmoothExpression.term(1.0, k, lam.real, COS, lam.imag).shift(anchor))
                raw.append(SmoothExpression.term(1.0, k, lam.real, SIN, lam.imag).shift(anchor))
    return raw


def fundamental_system(P: DifferentialOperator, anchor=0.0, domain=None, force_numeric=False) -> SolutionBasis:
    """Solutions with identity Cauchy data at ``anchor``.

    Closed form for constant coefficients, otherwise (or when forced) adaptive
    integration on ``domain`` (default ``[anchor-1, anchor+1]``).
    """
    m = P.order
    if m < 2:
        raise OrderOutOfRange("a fundamental system needs order >= 2")
    if P.is_constant and not force_numeric:
        raw = _raw_exponential_basis(characteristic_roots(P), anchor)
        M = ClosedFormBasis(raw, anchor).derivative_matrix(anchor, m)
        Minv = np.linalg.inv(M)
        phis = []
        for i in range(m):
            e = SmoothExpression.zero()
            for j in range(m):
                if Minv[j, i] != 0.0:
                    e = e + raw[j].scale(Minv[j, i])
            phis.append(_chop(e))
        return ClosedFormBasis(phis, anchor)
    if domain is None:
        domain = (anchor - 1.0, anchor + 1.0)
    return NumericBasis(P, anchor, domain)


def _chop(e: SmoothExpression, rel=1e-15):
    if e.is_zero():
        return e
    big = max(abs(t.coeff) for t in e.terms)
    return SmoothExpression(tuple(t for t in e.terms if abs(t.coeff) > rel * big))


def decaying_basis(Q: DifferentialOperator, side, anchor=0.0, custom=None) -> ClosedFormBasis:
    """The n/2 solutions of ``Q u = 0`` square integrable on one half-line.

    ``side="right"`` decays as x -> +inf (roots with negative real part),
    ``side="left"`` as x -> -inf. Elements are ``(x-a)^k e^{lam (x-a)}`` with
    ``a = anchor``. For variable-coefficient ``Q`` a ``custom`` sequence of
    expressions must be supplied; it is checked to annihilate ``Q`` but its
    decay is taken on trust.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    n = Q.order
    if custom is not None:
        basis = ClosedFormBasis(custom, anchor)
        if basis.size != n // 2:
            raise ValidationError(f"custom {side} basis must have n/2 = {n // 2} elements, got {basis.size}")
        lo, hi = (anchor - 3.0, anchor) if side == "left" else (anchor, anchor + 3.0)
        res = basis.residual(Q, lo, hi)
        if res > 1e-8:
            raise ValidationError(f"custom {side} basis does not solve Q u = 0 (relative residual {res:.2e})")
        return basis
    if not Q.is_constant:
        raise VariableCoefficientQUnsupported(
            "decaying solutions of a variable-coefficient Q must be supplied explicitly"
        )
    roots = characteristic_roots(Q)
    report = dichotomy_check(roots, n)
    if not report.ok:
        raise DichotomyViolation(
            f"Q violates the dichotomy ({report.n_stable} stable, {report.n_unstable} unstable roots)",
            report.offending,
        )
    keep = [(lam, mu) for lam, mu in roots if (lam.real < 0) == (side == "right")]
    return ClosedFormBasis(_raw_exponential_basis(keep, anchor), anchor)


def wronskian(basis: SolutionBasis, x) -> float:
    return float(np.linalg.det(basis.derivative_matrix(x, basis.size)))
