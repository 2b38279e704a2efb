"""Extension of f off [0, L], endpoint delta coefficients and the matching solve."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import ClosedFormBasis, decaying_basis
from .errors import RankDeficientMatching, SingularMatchingSystem
from .expression import SmoothExpression
from .green import CausalGreen, delta_response_decomposition
from .operators import ProblemSpec
from .quadrature import adaptive_gauss_legendre

RANK_TOL = 1e-10
MAX_CONDITION = 1e14


@dataclass(frozen=True)
class SideParam:
    """``b = b0 + B p`` for one side; ``p`` are the free coefficients."""

    basis: ClosedFormBasis
    site: float
    b0: np.ndarray
    B: np.ndarray
    free: tuple
    dependent: tuple

    @property
    def n_free(self):
        return self.B.shape[1]

    def b(self, p=None):
        p = np.zeros(self.n_free) if p is None else np.asarray(p, dtype=float)
        return self.b0 + self.B @ p

    def function(self, p=None) -> SmoothExpression:
        out = SmoothExpression.zero()
        for bj, u in zip(self.b(p), self.basis.expressions):
            out = out + u.scale(bj)
        return out


@dataclass(frozen=True)
class ExtensionParam:
    """Affine parametrization of the decaying extensions u- (x < 0) and u+ (x > L)."""

    minus: SideParam
    plus: SideParam
    alpha: int

    @property
    def b_minus(self):
        return self.minus.b0

    @property
    def b_plus(self):
        return self.plus.b0

    @property
    def free_indices(self):
        return (self.minus.free, self.plus.free)

    @property
    def n_free(self):
        return self.minus.n_free + self.plus.n_free

    def split(self, p):
        p = np.asarray(p, dtype=float)
        return p[: self.minus.n_free], p[self.minus.n_free:]

    def extension(self, f: SmoothExpression, L, p=None):
        """The piecewise function F as a callable."""
        pm, pp = self.split(np.zeros(self.n_free) if p is None else p)
        um, up = self.minus.function(pm), self.plus.function(pp)

        def F(x):
            x = np.asarray(x, dtype=float)
            return np.where(x < 0, um(x), np.where(x > L, up(x), f(x)))

        return F


def _side(basis: ClosedFormBasis, f: SmoothExpression, site, alpha):
    M = basis.derivative_matrix(site, alpha)  # alpha x n/2
    data = np.array([f.derivative(k)(site) for k in range(alpha)])
    width = M.shape[1]
    if alpha == 0:
        return SideParam(basis, site, np.zeros(width), np.eye(width), tuple(range(width)), ())
    _, R, perm = scipy.linalg.qr(M, pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size < alpha or diag[alpha - 1] <= RANK_TOL * max(diag[0], 1e-300):
        raise RankDeficientMatching(f"matching matrix at x={site} has numerical rank < {alpha}")
    dep = tuple(sorted(int(i) for i in perm[:alpha]))
    free = tuple(sorted(int(i) for i in perm[alpha:]))
    Md = M[:, dep]
    Mf = M[:, free]
    b0 = np.zeros(width)
    b0[list(dep)] = np.linalg.solve(Md, data)
    B = np.zeros((width, len(free)))
    if free:
        B[list(dep), :] = -np.linalg.solve(Md, Mf)
        B[list(free), :] = np.eye(len(free))
    return SideParam(basis, float(site), b0, B, free, dep)


def match_extension(problem: ProblemSpec) -> ExtensionParam:
    """Parametrize F so that derivatives 0..alpha-1 are continuous at 0 and L."""
    Q, f, L, alpha = problem.Q, problem.f, problem.L, problem.alpha
    left = decaying_basis(Q, "left", anchor=0.0, custom=problem.q_basis_left)
    right = decaying_basis(Q, "right", anchor=L, custom=problem.q_basis_right)
    return ExtensionParam(_side(left, f, 0.0, alpha), _side(right, f, L, alpha), alpha)


@dataclass(frozen=True)
class DeltaCoefficients:
    a_minus: np.ndarray
    a_plus: np.ndarray


@dataclass(frozen=True)
class AffineDeltaCoefficients:
    """``a- = a0- + A- p-`` and ``a+ = a0+ + A+ p+``."""

    a0_minus: np.ndarray
    A_minus: np.ndarray
    a0_plus: np.ndarray
    A_plus: np.ndarray

    def at(self, p_minus=None, p_plus=None) -> DeltaCoefficients:
        pm = np.zeros(self.A_minus.shape[1]) if p_minus is None else np.asarray(p_minus, dtype=float)
        pp = np.zeros(self.A_plus.shape[1]) if p_plus is None else np.asarray(p_plus, dtype=float)
        return DeltaCoefficients(self.a0_minus + self.A_minus @ pm, self.a0_plus + self.A_plus @ pp)


def jump_to_delta_matrix(Q, site, n_delta):
    """Matrix T with ``a = T J`` for jumps ``J_k = [F^{(k)}]`` at ``site``, k < n.

    ``F^{(j)}`` carries ``sum_{k<j} J_k delta^{(j-1-k)}``; a variable
    coefficient is moved through the delta by the Leibniz rule. Rows beyond
    ``n_delta`` only see jumps of order < alpha, which matching removes.
    """
    n = Q.order
    T = np.zeros((n, n))
    for j in range(1, n + 1):
        for k in range(j):
            order = j - 1 - k
            for t in range(order + 1):
                T[order - t, k] += math.comb(order, t) * (-1) ** t * Q.coeff_derivative(j, t, site)
    return T[:n_delta]


def delta_coefficients_from_jumps(problem: ProblemSpec, ext: ExtensionParam) -> AffineDeltaCoefficients:
    """Endpoint delta coefficients of ``g = Q F`` as affine maps of the free parameters."""
    Q, f, L, n = problem.Q, problem.f, problem.L, problem.n
    N = problem.n_delta
    fd0 = np.array([f.derivative(k)(0.0) for k in range(n)])
    fdL = np.array([f.derivative(k)(L) for k in range(n)])
    Um = ext.minus.basis.derivative_matrix(0.0, n)  # n x n/2
    Up = ext.plus.basis.derivative_matrix(L, n)
    # J- = f^{(k)}(0) - u-^{(k)}(0),  J+ = u+^{(k)}(L) - f^{(k)}(L)
    J0m = fd0 - Um @ ext.minus.b0
    JAm = -Um @ ext.minus.B
    J0p = Up @ ext.plus.b0 - fdL
    JAp = Up @ ext.plus.B
    Tm = jump_to_delta_matrix(Q, 0.0, N)
    Tp = jump_to_delta_matrix(Q, L, N)
    return AffineDeltaCoefficients(Tm @ J0m, Tm @ JAm, Tp @ J0p, Tp @ JAp)


def direct_jumps(problem: ProblemSpec, ext: ExtensionParam, p=None):
    """Jumps ``[F^{(k)}]`` at 0 and L, k < n, from the instantiated F(p)."""
    pm, pp = ext.split(np.zeros(ext.n_free) if p is None else p)
    um, up = ext.minus.function(pm), ext.plus.function(pp)
    f, L = problem.f, problem.L
    J0 = np.array([f.derivative(k)(0.0) - um.derivative(k)(0.0) for k in range(problem.n)])
    JL = np.array([up.derivative(k)(L) - f.derivative(k)(L) for k in range(problem.n)])
    return J0, JL


@dataclass(frozen=True)
class MatchingSolution:
    coefficients: DeltaCoefficients
    p_minus: np.ndarray
    p_plus: np.ndarray
    condition: float
    source_moments: np.ndarray  # int_0^L c(y) Qf(y) dy


def source_moments(G: CausalGreen, Qf, L, tol=1e-12):
    """``int_0^L c(y) Qf(y) dy`` with adaptive Gauss-Legendre panels."""
    return adaptive_gauss_legendre(lambda y: G.coefficients(y) * Qf(y)[:, None], 0.0, L, tol=tol)


def response_matrix(G: CausalGreen, site, n_delta):
    """Columns: basis coefficients of the regular response to delta^{(j)}(x - site)."""
    cols = []
    for j in range(n_delta):
        resp = delta_response_decomposition(G, j, site)
        cols.append(G.solve_cauchy(site, resp.regular.cauchy)[0])
    return np.array(cols).T


def solve_free_constants(
    G: CausalGreen, Qf: SmoothExpression, affine: AffineDeltaCoefficients, L, n_delta=None
) -> MatchingSolution:
    """Fix the free parameters so the assembled solution vanishes for x > L.

    Expanding the tail in the basis of P gives m linear equations
    ``I + D0 a- + DL a+ = 0`` where ``I`` are the source moments and the
    columns of ``D0``, ``DL`` are basis coefficients of the delta responses.
    """
    pm_n, pp_n = affine.A_minus.shape[1], affine.A_plus.shape[1]
    if G.degenerate or pm_n + pp_n == 0:
        return MatchingSolution(affine.at(), np.zeros(pm_n), np.zeros(pp_n), 1.0, np.zeros(0))
    n_delta = affine.a0_minus.size if n_delta is None else n_delta
    I = source_moments(G, Qf, L)
    D0 = response_matrix(G, 0.0, n_delta)
    DL = response_matrix(G, L, n_delta)
    M = np.hstack([D0 @ affine.A_minus, DL @ affine.A_plus])
    rhs = -(I + D0 @ affine.a0_minus + DL @ affine.a0_plus)
    if M.shape[0] != M.shape[1]:
        raise SingularMatchingSystem(f"matching system is {M.shape[0]}x{M.shape[1]}, expected square")
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularMatchingSystem(f"matching system is singular (condition {cond:.3e})", cond)
    p = np.linalg.solve(M, rhs)
    pm, pp = p[:pm_n], p[pm_n:]
    return MatchingSolution(affine.at(pm, pp), pm, pp, cond, I)
