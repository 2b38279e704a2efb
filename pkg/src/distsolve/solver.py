"""Assembly of the distributional solution of ``R h = f``."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .basis import ATOL, RTOL
from .quadrature import gauss_legendre
from .errors import IntegrationFailure, ValidationError, VariableCoefficientQUnsupported
from .expression import SmoothExpression, convolve_causal, definite_convolution
from .extension import (
    AffineDeltaCoefficients,
    ExtensionParam,
    delta_coefficients_from_jumps,
    match_extension,
    solve_free_constants,
)
from .green import CausalGreen, build_causal_green, delta_response_decomposition
from .operators import DifferentialOperator, ProblemSpec, apply_operator

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 2048
ENDPOINT_OFFSET = 1e-9
TAIL_TOL = 1e-8


class CausalParticular:
    """``w`` with ``P w = rhs * 1_[0, L]`` and ``w = 0`` for ``x < 0``."""

    def __init__(self, inner=None, tail=None, ode=None, L=None, identity=None):
        self.inner = inner  # closed form on [0, L]
        self.tail = tail  # closed form on (L, inf)
        self.ode = ode  # numeric evaluator for variable coefficients
        self.L = L
        self.identity = identity  # m = 0: w = rhs on [0, L]

    @property
    def closed_form(self):
        return self.inner is not None or self.identity is not None

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        inside = (x >= 0) & (x <= self.L)
        after = x > self.L
        if self.identity is not None:
            out[inside] = self.identity(x[inside])
            return out
        if self.inner is not None:
            out[inside] = self.inner(x[inside])
            out[after] = self.tail(x[after])
            return out
        sel = x >= 0
        if np.any(sel):
            out[sel] = self.ode(x[sel])
        return out


class _PiecewiseOde:
    def __init__(self, pieces):
        self.pieces = pieces

    def __call__(self, x):
        out = np.empty_like(x)
        for i, (lo, hi, sol) in enumerate(self.pieces):
            sel = (x >= lo) & ((x <= hi) if i == len(self.pieces) - 1 else (x < hi))
            if np.any(sel):
                out[sel] = sol(x[sel])[0]
        return out


def ode_causal_particular(P: DifferentialOperator, rhs: SmoothExpression, L, tail_length=1.0):
    """Causal ``w`` by direct integration of ``P w = rhs 1_[0, L]`` with zero data at 0."""
    m = P.order
    lead = P.leading

    def system(on):
        def f(x, y):
            p = P.coeff_values(x)[:, 0]
            dy = np.empty_like(y)
            dy[:-1] = y[1:]
            dy[-1] = ((rhs(x) if on else 0.0) - p[:m] @ y) / lead
            return dy

        return f

    y0 = np.zeros(m)
    pieces = []
    for lo, hi, on in ((0.0, L, True), (L, L + tail_length, False)):
        sol = solve_ivp(system(on), (lo, hi), y0, method="DOP853", rtol=RTOL, atol=ATOL, dense_output=True)
        if not sol.success:
            raise IntegrationFailure(f"causal integration failed on [{lo}, {hi}]: {sol.message}")
        pieces.append((lo, hi, sol.sol))
        y0 = sol.y[:, -1]
    return CausalParticular(ode=_PiecewiseOde(pieces), L=L)


class _VariationOfParameters:
    """``w(x) = sum_j phi_j(x) int_0^{min(x, L)} c_j(y) rhs(y) dy`` on a numeric basis.

    Uses the same ``c_j`` as the matching system, so the tail condition is
    satisfied to linear-algebra precision rather than integrator tolerance.
    """

    PANELS = 64
    ORDER = 20

    def __init__(self, G: CausalGreen, rhs: SmoothExpression, L):
        self.G, self.rhs, self.L = G, rhs, float(L)
        self.t, self.w = gauss_legendre(self.ORDER)
        self.breaks = np.linspace(0.0, self.L, self.PANELS + 1)
        lo, hi = self.breaks[:-1], self.breaks[1:]
        panel = self._partial(lo, hi)
        self.cumulative = np.vstack([np.zeros((1, G.m)), np.cumsum(panel, axis=0)])

    def _partial(self, lo, hi):
        """``int_lo^hi c(y) rhs(y) dy`` for arrays of short intervals."""
        half = 0.5 * (hi - lo)
        y = (0.5 * (lo + hi))[:, None] + half[:, None] * self.t[None, :]
        c = self.G.coefficients(y.ravel()).reshape(y.shape + (self.G.m,))
        vals = c * self.rhs(y.ravel()).reshape(y.shape)[..., None]
        return half[:, None] * np.einsum("k,ikj->ij", self.w, vals)

    def __call__(self, x):
        xc = np.minimum(x, self.L)
        idx = np.clip(np.searchsorted(self.breaks, xc, side="right") - 1, 0, self.PANELS - 1)
        C = self.cumulative[idx] + self._partial(self.breaks[idx], xc)
        phi = self.G.basis.derivatives(x, 1)[:, 0, :]
        return np.sum(phi * C, axis=1)


def causal_particular(P: DifferentialOperator, rhs: SmoothExpression, L, G: CausalGreen = None, tail_length=1.0):
    """Variation of parameters through the causal Green function.

    Closed form when ``P`` has constant coefficients, identity for ``P = 1``,
    and panel quadrature over the numeric basis otherwise.
    """
    if P.order == 0:
        return CausalParticular(identity=rhs, L=L)
    if G is None:
        G = build_causal_green(P, domain=(-1.0, L + tail_length + 1.0))
    if G.closed_form:
        return CausalParticular(
            inner=convolve_causal(G.kernel, rhs, 0.0),
            tail=definite_convolution(G.kernel, rhs, 0.0, L),
            L=L,
        )
    return CausalParticular(ode=_VariationOfParameters(G, rhs, L), L=L)


@dataclass
class DistributionalSolution:
    """``h = regular * 1_[0,L] + sum_k delta0[k] delta^{(k)}(x) + deltaL[k] delta^{(k)}(x - L)``."""

    L: float
    alpha: int
    delta0: np.ndarray
    deltaL: np.ndarray
    regular_x: np.ndarray
    regular_y: np.ndarray
    expression: SmoothExpression | None = None
    evaluator: object = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delta0 = np.asarray(self.delta0, dtype=float)
        self.deltaL = np.asarray(self.deltaL, dtype=float)
        if self.delta0.size != self.alpha or self.deltaL.size != self.alpha:
            raise ValidationError("delta layers must have exactly alpha coefficients per endpoint")
        if self.evaluator is None and self.expression is None:
            self.evaluator = CubicSpline(self.regular_x, self.regular_y)

    def regular(self, x):
        """Function part of h; zero outside ``[0, L]``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        sel = (x >= 0) & (x <= self.L)
        if np.any(sel):
            fn = self.expression if self.expression is not None else self.evaluator
            out[sel] = fn(x[sel])
        return out

    def __add__(self, other):
        if self.alpha != other.alpha or self.L != other.L:
            raise ValidationError("solutions live in different spaces")
        expr = None
        if self.expression is not None and other.expression is not None:
            expr = self.expression + other.expression
        ry = self.regular_y + other.regular(self.regular_x)
        return DistributionalSolution(
            self.L, self.alpha, self.delta0 + other.delta0, self.deltaL + other.deltaL,
            self.regular_x.copy(), ry, expr, None if expr is not None else CubicSpline(self.regular_x, ry),
        )

    def perturbed(self, site, order, amount):
        d0, dL = self.delta0.copy(), self.deltaL.copy()
        (d0 if site in (0, "0") else dL)[order] += amount
        return replace(self, delta0=d0, deltaL=dL)


@dataclass
class Assembly:
    """All pieces of ``P h = g`` before restriction to ``[0, L]``.

    ``function_part(x)`` is ``w(x) + sum_j a-_j v_{j,0}(x) + a+_j v_{j,L}(x)``,
    which must vanish for ``x > L`` when the constants are right.
    """

    problem: ProblemSpec
    G: CausalGreen
    particular: CausalParticular
    a_minus: np.ndarray
    a_plus: np.ndarray
    responses0: list
    responsesL: list

    def function_part(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.particular(x)
        for a, r in zip(self.a_minus, self.responses0):
            if a != 0.0:
                out = out + a * r.regular(x)
        for a, r in zip(self.a_plus, self.responsesL):
            if a != 0.0:
                out = out + a * r.regular(x)
        return out

    def with_coefficient(self, site, j, amount):
        am, ap = self.a_minus.copy(), self.a_plus.copy()
        (am if site in (0, "0", "minus") else ap)[j] += amount
        return replace(self, a_minus=am, a_plus=ap)

    def delta_layers(self):
        alpha = self.problem.alpha
        d0, dL = np.zeros(alpha), np.zeros(alpha)
        for layer, coeffs, resps in ((d0, self.a_minus, self.responses0), (dL, self.a_plus, self.responsesL)):
            for a, r in zip(coeffs, resps):
                for k, c in r.singular:
                    if k >= alpha:
                        raise ValidationError(f"delta layer of order {k} exceeds alpha - 1 = {alpha - 1}")
                    layer[k] += a * c
        return d0, dL

    def regular_expression(self):
        """Closed form of the function part on (0, L), if available."""
        if not self.particular.closed_form:
            return None
        expr = self.particular.identity if self.particular.identity is not None else self.particular.inner
        for a, r in zip(self.a_minus, self.responses0):
            if a != 0.0:
                if r.regular.expression is None:
                    if r.regular.basis is None:
                        continue
                    return None
                expr = expr + r.regular.expression.scale(a)
        return expr


def tail_residual(assembly: Assembly, samples=201, length=1.0):
    """``max |function part|`` over ``(L, L + length]``."""
    L = assembly.problem.L
    x = np.linspace(L, L + length, samples + 1)[1:]
    return float(np.max(np.abs(assembly.function_part(x))))


def interior_grid(L, samples=DEFAULT_SAMPLES):
    return np.linspace(ENDPOINT_OFFSET, L - ENDPOINT_OFFSET, samples)


def _check_problem(problem: ProblemSpec):
    Q = problem.Q
    if not Q.is_constant and (problem.q_basis_left is None or problem.q_basis_right is None):
        raise VariableCoefficientQUnsupported(
            "variable-coefficient Q needs user-supplied decaying bases on both half-lines"
        )


def assemble(problem: ProblemSpec, method="auto", force_numeric=False):
    """Solve for the delta coefficients and return ``(assembly, diagnostics)``."""
    _check_problem(problem)
    L, m, N = problem.L, problem.m, problem.n_delta
    Qf = apply_operator(problem.Q, problem.f)
    ext: ExtensionParam = match_extension(problem)
    affine: AffineDeltaCoefficients = delta_coefficients_from_jumps(problem, ext)
    G = build_causal_green(problem.P, domain=(-1.0, L + 2.0), force_numeric=force_numeric)
    matching = solve_free_constants(G, Qf, affine, L, N)
    a = matching.coefficients
    if m == 0 and method == "fast":
        particular = CausalParticular(identity=Qf, L=L)
    else:
        particular = causal_particular(problem.P, Qf, L, G=G)
    responses0 = [delta_response_decomposition(G, j, 0.0, N - 1) for j in range(N)]
    responsesL = [delta_response_decomposition(G, j, L, N - 1) for j in range(N)]
    assembly = Assembly(problem, G, particular, a.a_minus, a.a_plus, responses0, responsesL)
    diagnostics = {
        "condition": matching.condition,
        "free_minus": matching.p_minus.tolist(),
        "free_plus": matching.p_plus.tolist(),
        "free_indices_minus": list(ext.minus.free),
        "free_indices_plus": list(ext.plus.free),
        "a_minus": a.a_minus.tolist(),
        "a_plus": a.a_plus.tolist(),
    }
    return assembly, diagnostics


def solve(problem: ProblemSpec, samples=DEFAULT_SAMPLES, method="auto", force_numeric=False,
          check_tail=True) -> DistributionalSolution:
    """Minimal-singularity solution of ``R h = f`` on ``[0, L]``.

    ``method="fast"`` (only for ``P = 1``) takes ``h = Q F`` directly;
    ``"general"`` always goes through the Green function machinery.
    """
    if method not in ("auto", "fast", "general"):
        raise ValueError(f"unknown method {method!r}")
    if method == "fast" and problem.m != 0:
        raise ValidationError("the h = QF fast path requires P = 1")
    if method == "auto":
        method = "fast" if problem.m == 0 else "general"
    assembly, diag = assemble(problem, method, force_numeric)
    if method == "fast":
        d0, dL = np.array(assembly.a_minus), np.array(assembly.a_plus)
    else:
        d0, dL = assembly.delta_layers()
    tail = tail_residual(assembly) if problem.m > 0 else 0.0
    if check_tail and tail > TAIL_TOL:
        log.warning("tail residual %.3e exceeds %.1e", tail, TAIL_TOL)
    xs = interior_grid(problem.L, samples)
    expr = assembly.regular_expression()
    ys = expr(xs) if expr is not None else assembly.function_part(xs)
    evaluator = None if expr is not None else assembly.function_part
    meta = dict(diag, method=method, tail_residual=tail, n=problem.n, m=problem.m)
    sol = DistributionalSolution(problem.L, problem.alpha, d0, dL, xs, ys, expr, evaluator, meta)
    sol.assembly = assembly
    return sol
