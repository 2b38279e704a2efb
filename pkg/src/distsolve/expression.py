"""Closed-form scalar functions with exact calculus.

A :class:`SmoothExpression` is a finite sum of terms

    c * x**k * exp(a*x) * T(b*x),    T in {1, cos, sin}

The family is closed under addition, multiplication, differentiation,
antidifferentiation and translation, which is all the solver needs: every
derivative of the data and every convolution with a constant-coefficient
Green function stays inside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from ._ext import eval_terms

NONE, COS, SIN = 0, 1, 2
_TRIG_NAMES = {NONE: "none", COS: "cos", SIN: "sin"}
_TRIG_CODES = {"none": NONE, None: NONE, "cos": COS, "sin": SIN}


class Term(NamedTuple):
    coeff: float
    power: int
    exp_rate: float
    trig: int
    trig_freq: float

    def key(self):
        return (self.power, self.exp_rate, self.trig, self.trig_freq)


# rates and frequencies this small are root-finding noise; snapping them keeps
# the closed-form antiderivative away from 1/mu blow-up
SNAP = 1e-13


def _canonical(coeff, power, rate, trig, freq):
    coeff = float(coeff)
    rate = float(rate) + 0.0
    freq = float(freq) + 0.0
    if abs(rate) < SNAP:
        rate = 0.0
    if abs(freq) < SNAP:
        freq = 0.0
    trig = _TRIG_CODES.get(trig, trig)
    if trig == NONE:
        freq = 0.0
    elif freq == 0.0:
        if trig == SIN:
            return None
        trig = NONE
    elif freq < 0.0:
        freq = -freq
        if trig == SIN:
            coeff = -coeff
    if coeff == 0.0:
        return None
    return Term(coeff, int(power), rate, trig, freq)


def _collect(raw: Iterable) -> tuple:
    acc: dict = {}
    for t in raw:
        ct = _canonical(*t)
        if ct is None:
            continue
        k = ct.key()
        acc[k] = acc.get(k, 0.0) + ct.coeff
    terms = [Term(c, *k) for k, c in acc.items() if c != 0.0]
    terms.sort(key=lambda t: (t.exp_rate, t.trig_freq, t.trig, t.power))
    return tuple(terms)


def _trig_product(t1, b1, t2, b2):
    """Expand T1(b1 x) * T2(b2 x) as [(factor, trig, freq), ...]."""
    if t1 == NONE:
        return [(1.0, t2, b2)]
    if t2 == NONE:
        return [(1.0, t1, b1)]
    if t1 == COS and t2 == COS:
        return [(0.5, COS, b1 - b2), (0.5, COS, b1 + b2)]
    if t1 == SIN and t2 == SIN:
        return [(0.5, COS, b1 - b2), (-0.5, COS, b1 + b2)]
    if t1 == SIN and t2 == COS:
        return [(0.5, SIN, b1 + b2), (0.5, SIN, b1 - b2)]
    return [(0.5, SIN, b1 + b2), (-0.5, SIN, b1 - b2)]


@dataclass(frozen=True)
class SmoothExpression:
    """Immutable sum of polynomial x exponential x trigonometric terms."""

    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", _collect(self.terms))
        cols = list(zip(*self.terms)) if self.terms else [(), (), (), (), ()]
        object.__setattr__(
            self,
            "_table",
            (
                np.array(cols[0], dtype=float),
                np.array(cols[1], dtype=np.int_),
                np.array(cols[2], dtype=float),
                np.array(cols[3], dtype=np.int_),
                np.array(cols[4], dtype=float),
            ),
        )

    # -- constructors ---------------------------------------------------
    @classmethod
    def constant(cls, c):
        return cls(((c, 0, 0.0, NONE, 0.0),))

    @classmethod
    def monomial(cls, k, c=1.0):
        return cls(((c, k, 0.0, NONE, 0.0),))

    @classmethod
    def exponential(cls, rate, c=1.0, power=0):
        return cls(((c, power, rate, NONE, 0.0),))

    @classmethod
    def term(cls, coeff, power=0, exp_rate=0.0, trig=NONE, trig_freq=0.0):
        return cls(((coeff, power, exp_rate, trig, trig_freq),))

    @classmethod
    def from_complex_exponential(cls, c: complex, power: int, lam: complex):
        """Real part of ``c * x**power * exp(lam*x)``."""
        a, b = lam.real, lam.imag
        return cls(
            (
                (c.real, power, a, COS, b),
                (-c.imag, power, a, SIN, b),
            )
        )

    @classmethod
    def zero(cls):
        return cls(())

    # -- queries --------------------------------------------------------
    @property
    def table(self):
        return self._table

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(t.power == 0 and t.exp_rate == 0.0 and t.trig == NONE for t in self.terms)

    def constant_value(self):
        if not self.is_constant():
            raise ValueError("expression is not constant")
        return sum(t.coeff for t in self.terms)

    def to_list(self):
        return [[t.coeff, t.power, t.exp_rate, _TRIG_NAMES[t.trig], t.trig_freq] for t in self.terms]

    @classmethod
    def from_list(cls, rows):
        return cls(tuple((float(c), int(k), float(a), _TRIG_CODES[tr], float(b)) for c, k, a, tr, b in rows))

    # -- evaluation -----------------------------------------------------
    def __call__(self, x):
        if np.isscalar(x):
            return float(eval_terms(np.array([float(x)]), *self._table)[0])
        return eval_terms(np.asarray(x, dtype=float), *self._table)

    evaluate = __call__

    # -- algebra --------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = SmoothExpression.constant(other)
        return SmoothExpression(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other if isinstance(other, SmoothExpression) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        return SmoothExpression(tuple(t._replace(coeff=t.coeff * c) for t in self.terms))

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return self.scale(float(other))
        out = []
        for s in self.terms:
            for t in other.terms:
                for fac, trig, freq in _trig_product(s.trig, s.trig_freq, t.trig, t.trig_freq):
                    out.append(
                        (s.coeff * t.coeff * fac, s.power + t.power, s.exp_rate + t.exp_rate, trig, freq)
                    )
        return SmoothExpression(tuple(out))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.scale(1.0 / float(c))

    def __pow__(self, k):
        if int(k) != k or k < 0:
            raise ValueError("only nonnegative integer powers stay in the family")
        out = SmoothExpression.constant(1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    # -- calculus -------------------------------------------------------
    def derivative(self, order=1):
        expr = self
        for _ in range(order):
            expr = expr._d1()
        return expr

    def _d1(self):
        out = []
        for c, k, a, trig, b in self.terms:
            if k > 0:
                out.append((c * k, k - 1, a, trig, b))
            if a != 0.0:
                out.append((c * a, k, a, trig, b))
            if trig == COS:
                out.append((-c * b, k, a, SIN, b))
            elif trig == SIN:
                out.append((c * b, k, a, COS, b))
        return SmoothExpression(tuple(out))

    def antiderivative(self):
        """An antiderivative (the additive constant is unspecified)."""
        out = []
        for c, k, a, trig, b in self.terms:
            mu = complex(a, b if trig != NONE else 0.0)
            if mu == 0:
                out.append((c / (k + 1), k + 1, 0.0, NONE, 0.0))
                continue
            # int x^k e^{mu x} = e^{mu x} sum_i (-1)^i k!/(k-i)! x^{k-i} / mu^{i+1}
            for i in range(k + 1):
                z = (-1) ** i * math.perm(k, i) / mu ** (i + 1)
                if trig == SIN:
                    # Im[z x^p e^{mu x}] = x^p e^{ax} (Re z sin + Im z cos)
                    out.append((c * z.real, k - i, a, SIN, b))
                    out.append((c * z.imag, k - i, a, COS, b))
                else:
                    out.append((c * z.real, k - i, a, trig if trig != NONE else NONE, b))
                    if trig == COS:
                        out.append((-c * z.imag, k - i, a, SIN, b))
        return SmoothExpression(tuple(out))

    def integrate(self, lo, hi):
        F = self.antiderivative()
        return F(hi) - F(lo)

    def shift(self, s):
        """Return the expression ``x -> self(x - s)``."""
        out = []
        for c, k, a, trig, b in self.terms:
            scale = c * math.exp(-a * s)
            if trig == NONE:
                trig_parts = [(1.0, NONE)]
            elif trig == COS:
                trig_parts = [(math.cos(b * s), COS), (math.sin(b * s), SIN)]
            else:
                trig_parts = [(math.cos(b * s), SIN), (-math.sin(b * s), COS)]
            for i in range(k + 1):
                poly = math.comb(k, i) * (-s) ** (k - i)
                for tf, tt in trig_parts:
                    out.append((scale * poly * tf, i, a, tt, b))
        return SmoothExpression(tuple(out))

    def separate(self):
        """Split ``self(x - y)`` into ``[(A, B), ...]`` with ``sum A(x) B(y)``."""
        pairs = []
        for c, k, a, trig, b in self.terms:
            if trig == NONE:
                tparts = [(1.0, NONE, NONE)]
            elif trig == COS:
                tparts = [(1.0, COS, COS), (1.0, SIN, SIN)]
            else:
                tparts = [(1.0, SIN, COS), (-1.0, COS, SIN)]
            for i in range(k + 1):
                poly = c * math.comb(k, i) * (-1.0) ** (k - i)
                for tf, tx, ty in tparts:
                    A = SmoothExpression.term(poly * tf, i, a, tx, b)
                    B = SmoothExpression.term(1.0, k - i, -a, ty, b)
                    pairs.append((A, B))
        return pairs

    def __repr__(self):
        if not self.terms:
            return "SmoothExpression(0)"
        parts = []
        for c, k, a, trig, b in self.terms:
            s = f"{c:.6g}"
            if k:
                s += f"*x^{k}"
            if a:
                s += f"*exp({a:.6g}*x)"
            if trig != NONE:
                s += f"*{_TRIG_NAMES[trig]}({b:.6g}*x)"
            parts.append(s)
        return "SmoothExpression(" + " + ".join(parts) + ")"


def convolve_causal(kernel: SmoothExpression, rhs: SmoothExpression, start=0.0):
    """Closed form of ``x -> int_start^x kernel(x - y) rhs(y) dy``."""
    total = SmoothExpression.zero()
    for A, B in kernel.separate():
        J = (B * rhs).antiderivative()
        total = total + A * (J - J(start))
    return total


def definite_convolution(kernel: SmoothExpression, rhs: SmoothExpression, lo, hi):
    """Closed form of ``x -> int_lo^hi kernel(x - y) rhs(y) dy``."""
    total = SmoothExpression.zero()
    for A, B in kernel.separate():
        J = (B * rhs).antiderivative()
        total = total + A * (J(hi) - J(lo))
    return total


def complex_exp_poly(coeffs, lam: complex) -> SmoothExpression:
    """Real part of ``sum_k coeffs[k] x**k exp(lam x)``."""
    total = SmoothExpression.zero()
    for k, c in enumerate(coeffs):
        c = complex(c)
        if c != 0:
            total = total + SmoothExpression.from_complex_exponential(c, k, complex(lam))
    return total


__all__ = [
    "SmoothExpression",
    "Term",
    "NONE",
    "COS",
    "SIN",
    "convolve_causal",
    "definite_convolution",
    "complex_exp_poly",
]
