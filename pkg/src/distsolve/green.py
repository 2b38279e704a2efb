"""Causal fundamental solution of P and responses to endpoint delta layers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import NumericBasis, SolutionBasis, fundamental_system
from .errors import DegenerateGreen, OnDiagonal, OrderOutOfRange, SingularWronskian, ValidationError
from .expression import SmoothExpression
from .operators import DifferentialOperator

DIAGONAL_GUARD = 1e-12


class CausalGreen:
    """``G(x, y)`` with ``P G = delta(x - y)`` and ``G = 0`` for ``x < y``.

    For ``x > y``, ``G(x, y) = sum_j c_j(y) phi_j(x)`` where ``c(y)`` solves
    the Wronskian system ``W(y) c = e_{m-1}``. For constant coefficients the
    translation structure ``G(x, y) = G0(x - y)`` also gives a closed form.
    """

    def __init__(self, P: DifferentialOperator, basis: SolutionBasis | None):
        self.P = P
        self.m = P.order
        self.degenerate = self.m == 0
        self.basis = basis
        self.kernel = None
        if not self.degenerate and basis.expressions is not None and P.is_constant and basis.anchor == 0.0:
            # identity Cauchy data at 0: the last basis element is G0
            self.kernel = basis.expressions[-1]

    @property
    def closed_form(self):
        return self.kernel is not None

    def _require(self):
        if self.degenerate:
            raise DegenerateGreen("P = 1: the Green function is delta(x - y)")

    def wronskian_matrix(self, y):
        return self.basis.derivatives(np.atleast_1d(np.asarray(y, dtype=float)), self.m)

    def solve_cauchy(self, y, data):
        """Coefficients ``d`` with ``sum_j d_j phi_j`` having Cauchy data ``data`` at ``y``.

        Vectorized over ``y``; ``data`` has shape ``(m,)`` or ``(len(y), m)``.
        """
        self._require()
        y = np.atleast_1d(np.asarray(y, dtype=float))
        W = self.wronskian_matrix(y)
        rows = np.max(np.abs(W), axis=2, keepdims=True)
        Ws = W / rows
        det = np.linalg.det(Ws)
        if np.any(np.abs(det) < 1e-12):
            raise SingularWronskian(f"Wronskian nearly singular (min |det| = {np.min(np.abs(det)):.3e})")
        rhs = np.broadcast_to(np.asarray(data, dtype=float), (y.size, self.m)) / rows[:, :, 0]
        return np.linalg.solve(Ws, rhs[..., None])[..., 0]

    def coefficients(self, y):
        """``c_j(y)`` of the representation above; shape ``(len(y), m)``."""
        e = np.zeros(self.m)
        e[-1] = 1.0
        return self.solve_cauchy(y, e)

    def one_sided_derivatives(self, y, count):
        """``d^j/dx^j G(x, y)`` at ``x = y + 0`` for ``j < count``."""
        self._require()
        if self.closed_form:
            return np.array([self.kernel.derivative(j)(0.0) for j in range(count)])
        c = self.coefficients(y)[0]
        D = self.basis.derivatives(np.array([float(y)]), count)[0]
        return D @ c


def build_causal_green(P: DifferentialOperator, domain=(-1.0, 2.0), force_numeric=False) -> CausalGreen:
    """Causal Green function; ``domain`` bounds the numeric basis when needed."""
    if P.order == 0:
        if P.coeffs != (1.0,):
            raise ValidationError("order-0 P must be normalized to 1")
        return CausalGreen(P, None)
    lead = P.leading
    if not isinstance(lead, float) or lead != 1.0:
        raise ValidationError("P must be monic")
    basis = fundamental_system(P, 0.0, domain=domain, force_numeric=force_numeric)
    return CausalGreen(P, basis)


def green_eval(G: CausalGreen, x, y, dy_order=0):
    """``d^k/dy^k G(x, y)`` off the diagonal."""
    G._require()
    if abs(x - y) < DIAGONAL_GUARD:
        raise OnDiagonal(f"|x - y| = {abs(x - y):.1e} is on the diagonal")
    if x < y:
        return 0.0
    if G.closed_form:
        return (-1.0) ** dy_order * G.kernel.derivative(dy_order)(x - y)
    # (-1)^k d^k_y G(x, s) is the regular part of the response to delta^{(k)}(x - s)
    resp = delta_response_decomposition(G, dy_order, y)
    return (-1.0) ** dy_order * float(resp.regular(np.array([x]))[0])


@dataclass(frozen=True)
class ResponseRegular:
    """``1_{x > site} v(x)`` with ``P v = 0`` and Cauchy data ``cauchy`` at ``site + 0``."""

    site: float
    cauchy: np.ndarray
    coeffs: np.ndarray | None
    basis: SolutionBasis | None
    expression: SmoothExpression | None

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        sel = x > self.site
        if not np.any(sel) or self.basis is None and self.expression is None:
            return out
        if self.expression is not None:
            out[sel] = self.expression(x[sel])
        else:
            out[sel] = self.basis.combine(self.coeffs, x[sel])
        return out


@dataclass(frozen=True)
class DeltaResponse:
    order: int
    site: float
    regular: ResponseRegular
    singular: tuple  # ((k, coeff), ...) meaning coeff * delta^{(k)}(x - site)


def _jump_system(P: DifferentialOperator, j, site):
    """Linear system for the causal solution of ``P w = delta^{(j)}(x - site)``.

    Unknowns: singular coefficients sigma_0..sigma_{j-m} (if j >= m) followed by
    Cauchy data v_0..v_{m-1} of the regular part at ``site + 0``. Row r holds
    the coefficient of ``delta^{(r)}(x - site)`` in ``P w``, using
    ``p(x) delta^{(k)}(x - s) = sum_t C(k,t) (-1)^t p^{(t)}(s) delta^{(k-t)}(x - s)``
    and ``D^l(1_{x>s} v) = 1 v^{(l)} + sum_{q<l} v^{(q)}(s) delta^{(l-1-q)}``.
    """
    m = P.order
    K = j - m
    n_sigma = K + 1 if K >= 0 else 0
    size = n_sigma + m
    A = np.zeros((size, size))

    def pd(l, t):
        return P.coeff_derivative(l, t, site)

    for i in range(n_sigma):
        for l in range(m + 1):
            for t in range(i + l + 1):
                r = i + l - t
                if r < size:
                    A[r, i] += math.comb(i + l, t) * (-1) ** t * pd(l, t)
    for q in range(m):
        col = n_sigma + q
        for l in range(q + 1, m + 1):
            for t in range(l - q):
                r = l - 1 - q - t
                A[r, col] += math.comb(l - 1 - q, t) * (-1) ** t * pd(l, t)
    b = np.zeros(size)
    b[j] = 1.0
    return A, b, n_sigma


def delta_response_decomposition(G: CausalGreen, j, site, max_order=None) -> DeltaResponse:
    """Causal solution of ``P w = delta^{(j)}(x - site)`` split into parts.

    ``max_order`` is the largest admissible ``j``, (n+m)/2 - 1 in the solver.
    """
    if j < 0 or (max_order is not None and j > max_order):
        raise OrderOutOfRange(f"delta order {j} outside [0, {max_order}]")
    site = float(site)
    if G.degenerate:
        reg = ResponseRegular(site, np.zeros(0), None, None, None)
        return DeltaResponse(j, site, reg, ((j, 1.0),))
    A, b, n_sigma = _jump_system(G.P, j, site)
    sol = np.linalg.solve(A, b)
    sigma = sol[:n_sigma]
    cauchy = sol[n_sigma:]
    singular = tuple((k, float(sigma[k])) for k in range(n_sigma) if sigma[k] != 0.0)
    expr = None
    coeffs = None
    if G.closed_form:
        expr = SmoothExpression.zero()
        for q in range(G.m):
            if cauchy[q] != 0.0:
                expr = expr + G.basis.expressions[q].shift(site).scale(cauchy[q])
    else:
        coeffs = G.solve_cauchy(site, cauchy)[0]
    reg = ResponseRegular(site, cauchy, coeffs, G.basis, expr)
    return DeltaResponse(j, site, reg, singular)


__all__ = [
    "CausalGreen",
    "DeltaResponse",
    "ResponseRegular",
    "build_causal_green",
    "delta_response_decomposition",
    "green_eval",
    "NumericBasis",
]
