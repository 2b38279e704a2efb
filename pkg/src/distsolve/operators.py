"""Formal differential operators, problem records and characteristic roots."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .errors import (
    DegenerateLeadingCoefficient,
    NonConstantCoefficients,
    OddOrder,
    ValidationError,
)
from .expression import SmoothExpression

Coefficient = Union[float, SmoothExpression]

ROOT_CLUSTER_TOL = 1e-8
AXIS_TOL = 1e-8


def _normalize_coeff(c):
    if isinstance(c, SmoothExpression):
        return c.constant_value() if c.is_constant() else c
    return float(c)


@dataclass(frozen=True)
class DifferentialOperator:
    """``sum_j coeffs[j](x) * d^j/dx^j``; coefficients listed constant-first.

    Each coefficient is a float or a :class:`SmoothExpression` in ``x``.
    Trailing zero coefficients are stripped, so the order is the index of the
    last nonzero entry.
    """

    coeffs: tuple

    def __post_init__(self):
        cs = [_normalize_coeff(c) for c in self.coeffs]
        while len(cs) > 1 and isinstance(cs[-1], float) and cs[-1] == 0.0:
            cs.pop()
        if not cs:
            cs = [0.0]
        object.__setattr__(self, "coeffs", tuple(cs))
        if self.order % 2:
            raise OddOrder(f"operator order must be even, got {self.order}")
        lead = cs[-1]
        if isinstance(lead, float):
            if lead == 0.0:
                raise DegenerateLeadingCoefficient("leading coefficient vanishes")
        elif lead.is_zero():
            raise DegenerateLeadingCoefficient("leading coefficient vanishes")

    @property
    def order(self):
        return len(self.coeffs) - 1

    @property
    def is_constant(self):
        return all(isinstance(c, float) for c in self.coeffs)

    @property
    def leading(self):
        return self.coeffs[-1]

    def coeff_expr(self, j) -> SmoothExpression:
        c = self.coeffs[j] if j < len(self.coeffs) else 0.0
        return c if isinstance(c, SmoothExpression) else SmoothExpression.constant(c)

    def coeff_derivative(self, j, k, x):
        """``d^k/dx^k`` of coefficient ``j`` evaluated at ``x``."""
        c = self.coeffs[j] if j < len(self.coeffs) else 0.0
        if isinstance(c, float):
            return c if k == 0 else 0.0
        return c.derivative(k)(x)

    def constant_coeffs(self):
        if not self.is_constant:
            raise NonConstantCoefficients("operator has non-constant coefficients")
        return np.array(self.coeffs, dtype=float)

    def coeff_values(self, x):
        """Array of shape (order+1, len(x)) of coefficient values."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        rows = []
        for c in self.coeffs:
            rows.append(np.full_like(x, c) if isinstance(c, float) else c(x))
        return np.array(rows)

    def scaled(self, s):
        return DifferentialOperator(tuple(c * s if isinstance(c, float) else c.scale(s) for c in self.coeffs))

    def leading_bounded_away(self, lo, hi, samples=401, rel_tol=1e-8):
        lead = self.leading
        if isinstance(lead, float):
            return True
        v = lead(np.linspace(lo, hi, samples))
        scale = np.max(np.abs(v))
        return bool(scale > 0 and (np.all(v > rel_tol * scale) or np.all(v < -rel_tol * scale)))

    def __repr__(self):
        return f"DifferentialOperator(order={self.order}, coeffs={list(self.coeffs)!r})"


def apply_operator(op: DifferentialOperator, u: SmoothExpression) -> SmoothExpression:
    """Exact ``sum_j q_j(x) u^{(j)}(x)``."""
    out = SmoothExpression.zero()
    du = u
    for j, c in enumerate(op.coeffs):
        if j:
            du = du.derivative()
        if isinstance(c, float):
            if c != 0.0:
                out = out + du.scale(c)
        else:
            out = out + c * du
    return out


def formal_adjoint_apply(op: DifferentialOperator, psi: SmoothExpression) -> SmoothExpression:
    """``sum_j (-1)^j (q_j psi)^{(j)}``, the formal adjoint applied to ``psi``."""
    out = SmoothExpression.zero()
    for j in range(op.order + 1):
        out = out + (op.coeff_expr(j) * psi).derivative(j).scale((-1.0) ** j)
    return out


# -- characteristic roots ---------------------------------------------------

CLUSTER_RADIUS = 5e-2


def _poly_derivative_coeffs(c_high, k):
    p = np.asarray(c_high, dtype=complex)
    for _ in range(k):
        p = np.polyder(p)
    return p


def _rel_value(p_high, z):
    """|p(z)| relative to the sum of term magnitudes at z."""
    if len(p_high) == 0:
        return 0.0
    deg = len(p_high) - 1
    powers = np.abs(z) ** np.arange(deg, -1, -1)
    scale = np.sum(np.abs(p_high) * powers)
    if scale == 0:
        return 0.0
    return abs(np.polyval(p_high, z)) / scale


def _newton_polish(p_high, z, steps=1):
    dp = np.polyder(p_high)
    for _ in range(steps):
        val = np.polyval(p_high, z)
        der = np.polyval(dp, z)
        if der == 0:
            break
        z_new = z - val / der
        if abs(np.polyval(p_high, z_new)) <= abs(val):
            z = z_new
    return z


def _linkage_groups(zs, radius):
    n = len(zs)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(zs[i] - zs[j]) <= radius * max(1.0, abs(zs[i])):
                parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _resolve_cluster(p_high, zs, radius, tol):
    """Split a candidate cluster into verified multiple roots."""
    mu = len(zs)
    if mu == 1:
        return [(zs[0], 1)]
    center = complex(np.mean(zs))
    dk = _poly_derivative_coeffs(p_high, mu - 1)
    for _ in range(8):
        center = _newton_polish(dk, center, steps=1)
    if all(_rel_value(_poly_derivative_coeffs(p_high, k), center) <= 1e-10 for k in range(mu)):
        return [(center, mu)]
    if radius <= tol:
        return [(z, 1) for z in zs]
    out = []
    for g in _linkage_groups(zs, radius / 10.0):
        out.extend(_resolve_cluster(p_high, [zs[i] for i in g], radius / 10.0, tol))
    return out


def polynomial_roots(coeffs_low_first, cluster_tol=ROOT_CLUSTER_TOL):
    """Roots with multiplicities of ``sum_j c_j s^j``.

    Companion-matrix eigenvalues, one Newton polish per root, then candidate
    clusters are verified as multiple roots by the vanishing of the
    derivatives at a refined center.
    """
    c = np.trim_zeros(np.asarray(coeffs_low_first, dtype=float), "b")
    p_high = c[::-1].astype(complex)
    if len(p_high) <= 1:
        return []
    raw = np.roots(p_high)
    zs = [complex(_newton_polish(p_high, complex(z))) for z in raw]
    out = []
    # a mu-fold root scatters by ~eps^(1/mu); verification splits false merges
    for g in _linkage_groups(zs, CLUSTER_RADIUS):
        out.extend(_resolve_cluster(p_high, [zs[i] for i in g], CLUSTER_RADIUS, cluster_tol))
    # real polynomial: snap near-real roots, pair conjugates exactly
    snapped = []
    for z, mu in out:
        if abs(z.imag) <= cluster_tol * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        snapped.append((z, mu))
    upper = [(z, mu) for z, mu in snapped if z.imag > 0]
    result = [(z, mu) for z, mu in snapped if z.imag == 0]
    for z, mu in upper:
        result.append((z, mu))
        result.append((z.conjugate(), mu))
    result = [(complex(z), int(mu)) for z, mu in result]
    result.sort(key=lambda r: (r[0].real, r[0].imag))
    return result


def characteristic_roots(op: DifferentialOperator, cluster_tol=ROOT_CLUSTER_TOL):
    """Roots of ``sum_j q_j lambda^j`` as ``[(root, multiplicity), ...]``."""
    roots = polynomial_roots(op.constant_coeffs(), cluster_tol)
    if sum(mu for _, mu in roots) != op.order:
        raise ValidationError("root multiplicities do not add up to the operator order")
    return roots


@dataclass(frozen=True)
class DichotomyReport:
    ok: bool
    n_stable: int
    n_unstable: int
    offending: tuple = field(default=())

    def __bool__(self):
        return self.ok


def dichotomy_check(roots, order=None, axis_tol=AXIS_TOL) -> DichotomyReport:
    """n/2 roots strictly left of the imaginary axis and n/2 strictly right."""
    if order is None:
        order = sum(mu for _, mu in roots)
    on_axis = tuple((z, mu) for z, mu in roots if abs(z.real) <= axis_tol)
    n_left = sum(mu for z, mu in roots if z.real < -axis_tol)
    n_right = sum(mu for z, mu in roots if z.real > axis_tol)
    ok = not on_axis and n_left == order // 2 and n_right == order // 2
    offending = on_axis if on_axis else (() if ok else tuple(roots))
    return DichotomyReport(ok, n_left, n_right, offending)


@dataclass(frozen=True)
class ProblemSpec:
    """``R h = f`` on ``[0, L]`` with kernel defined by ``Q R = P delta``.

    A non-monic ``P`` with constant leading coefficient ``c`` is normalized by
    dividing both operators by ``c`` (the kernel is unchanged); ``scale``
    records ``c``.
    """

    Q: DifferentialOperator
    P: DifferentialOperator
    f: SmoothExpression
    L: float
    q_basis_left: tuple = None
    q_basis_right: tuple = None
    scale: float = 1.0

    def __post_init__(self):
        L = float(self.L)
        object.__setattr__(self, "L", L)
        if not (L > 0 and math.isfinite(L)):
            raise ValidationError(f"interval length must be positive, got {L}")
        n, m = self.Q.order, self.P.order
        if not n > m >= 0:
            raise ValidationError(f"need order(Q) > order(P) >= 0, got n={n}, m={m}")
        lead = self.P.leading
        if not isinstance(lead, float):
            raise ValidationError("P must have a constant leading coefficient")
        if lead != 1.0:
            object.__setattr__(self, "Q", self.Q.scaled(1.0 / lead))
            object.__setattr__(self, "P", self.P.scaled(1.0 / lead))
            object.__setattr__(self, "scale", self.scale * lead)
        if not self.Q.leading_bounded_away(-1.0, L + 1.0):
            raise DegenerateLeadingCoefficient("leading coefficient of Q is not bounded away from 0 on [-1, L+1]")
        for name in ("q_basis_left", "q_basis_right"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(v))

    @property
    def n(self):
        return self.Q.order

    @property
    def m(self):
        return self.P.order

    @property
    def alpha(self):
        return (self.n - self.m) // 2

    @property
    def n_delta(self):
        """Number of delta coefficients per endpoint in QF, (n+m)/2."""
        return (self.n + self.m) // 2

    def with_f(self, f):
        return replace(self, f=f)


def operator_from_roots(roots: Sequence[complex], lead=1.0) -> DifferentialOperator:
    """Constant-coefficient operator with the given characteristic roots."""
    poly = np.array([1.0 + 0j])
    for r in roots:
        poly = np.convolve(poly, [1.0, -complex(r)])
    if np.max(np.abs(poly.imag)) > 1e-9 * np.max(np.abs(poly)):
        raise ValidationError("roots must be closed under conjugation")
    return DifferentialOperator(tuple((lead * poly.real)[::-1]))
