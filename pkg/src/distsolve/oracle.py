"""Independent checks: the kernel R, its action on distributions, and the
epsilon-regularized equation ``eps h + R h = f`` solved by Nystrom.

Nothing here reuses the solver's delta algebra; R is rebuilt from the
rational symbol ``P(i xi) / Q(i xi)`` by residues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._ext import eval_two_sided, kernel_matrix
from .errors import GapTooSmall, IllConditioned, SymbolZeroOnAxis, ValidationError
from .expression import SmoothExpression, complex_exp_poly
from .operators import AXIS_TOL, DifferentialOperator, apply_operator, characteristic_roots
from .quadrature import composite_gauss, gauss_legendre


def _taylor_shift(c_low, lam):
    """Coefficients of ``p(lam + u)`` in powers of ``u``."""
    c = np.asarray(c_low, dtype=complex)
    n = c.size
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        out[k] = sum(math.comb(j, k) * c[j] * lam ** (j - k) for j in range(k, n))
    return out


def _residue_poly(p_low, q_low, lam, mu):
    """Polynomial ``r(t)`` with ``Res_{s=lam} P(s) e^{st} / Q(s) = r(t) e^{lam t}``."""
    qs = _taylor_shift(q_low, lam)
    ps = _taylor_shift(p_low, lam)
    d = qs[mu:]  # Q(lam+u) / u^mu
    phi = np.zeros(mu, dtype=complex)
    for k in range(mu):
        pk = ps[k] if k < ps.size else 0.0
        acc = sum(d[i] * phi[k - i] for i in range(1, min(k, d.size - 1) + 1))
        phi[k] = (pk - acc) / d[0]
    # sum_k phi_k t^{mu-1-k} / (mu-1-k)!
    return np.array([phi[mu - 1 - e] / math.factorial(e) for e in range(mu)])


@dataclass(frozen=True)
class RationalKernel:
    """``R(t)`` for ``t >= 0`` (``right``) and ``t < 0`` (``left``), real closed forms."""

    Q: DifferentialOperator
    P: DifferentialOperator
    right: SmoothExpression
    left: SmoothExpression
    residue_terms: tuple  # ((pole, poly_coeffs, side), ...)
    imag_residual: float

    @property
    def gap(self):
        return self.Q.order - self.P.order

    def symbol(self, xi):
        xi = np.asarray(xi, dtype=float)
        s = 1j * xi
        return np.polyval(self.P.constant_coeffs()[::-1], s) / np.polyval(self.Q.constant_coeffs()[::-1], s)

    def __call__(self, t):
        return self.derivative(0)(t)

    def derivative(self, k):
        r, l = self.right.derivative(k), self.left.derivative(k)

        def fn(t):
            t = np.asarray(t, dtype=float)
            return eval_two_sided(t, r.table, l.table)

        return fn

    def matrix(self, x, y):
        return kernel_matrix(x, y, self.right.table, self.left.table)

    # -- diagnostics ----------------------------------------------------
    def symmetry_defect(self, t_max=10.0, samples=401):
        t = np.linspace(0.0, t_max, samples)
        return float(np.max(np.abs(self.right(t) - self.left(-t))))

    def definiteness(self, xi_max=1e4, samples=20001):
        """+1 / -1 if the real part of the symbol keeps one sign on the real line, else 0."""
        xi = np.concatenate([-np.geomspace(xi_max, 1e-6, samples // 2), [0.0], np.geomspace(1e-6, xi_max, samples // 2)])
        re = self.symbol(xi).real
        if np.all(re > 0):
            return 1
        if np.all(re < 0):
            return -1
        return 0

    def is_even_symbol(self):
        q, p = self.Q.constant_coeffs(), self.P.constant_coeffs()
        return not np.any(q[1::2]) and not np.any(p[1::2])

    def continuity_defects(self):
        """One-sided derivative mismatch at 0 for orders 0..gap-2."""
        return [abs(self.right.derivative(k)(0.0) - self.left.derivative(k)(0.0)) for k in range(self.gap - 1)]

    def defining_residual(self, t_max=5.0, samples=201):
        """Relative size of ``Q R`` off the diagonal."""
        worst = 0.0
        for expr, t in ((self.right, np.linspace(1e-3, t_max, samples)), (self.left, np.linspace(-t_max, -1e-3, samples))):
            r = np.abs(apply_operator(self.Q, expr)(t))
            scale = max(np.max(np.abs(self.Q.coeffs[j] * expr.derivative(j)(t))) for j in range(self.Q.order + 1))
            worst = max(worst, float(np.max(r)) / max(scale, 1e-300))
        return worst


def kernel_from_symbol(Q: DifferentialOperator, P: DifferentialOperator) -> RationalKernel:
    """Inverse Fourier transform of ``P(i xi)/Q(i xi)`` by residues.

    For ``t > 0`` the contour closes in the left half plane
    (``R = sum Res``), for ``t < 0`` in the right (``R = -sum Res``).
    """
    q, p = Q.constant_coeffs(), P.constant_coeffs()
    if Q.order - P.order < 2:
        raise GapTooSmall("order(Q) - order(P) must be at least 2 for a continuous kernel")
    roots = characteristic_roots(Q)
    on_axis = [(z, mu) for z, mu in roots if abs(z.real) <= AXIS_TOL]
    if on_axis:
        raise SymbolZeroOnAxis(f"Q(i xi) vanishes for real xi at roots {on_axis}")
    terms = []
    right = SmoothExpression.zero()
    left = SmoothExpression.zero()
    t_chk = np.linspace(-5.0, 5.0, 201)
    imag = np.zeros_like(t_chk, dtype=complex)
    for lam, mu in roots:
        poly = _residue_poly(p, q, lam, mu)
        side = "right" if lam.real < 0 else "left"
        sign = 1.0 if side == "right" else -1.0
        poly = sign * poly
        terms.append((lam, tuple(poly), side))
        if side == "right":
            right = right + complex_exp_poly(poly, lam)
            sel = t_chk >= 0
        else:
            left = left + complex_exp_poly(poly, lam)
            sel = t_chk < 0
        imag[sel] += np.polyval(poly[::-1], t_chk[sel]) * np.exp(lam * t_chk[sel])
    scale = max(float(np.max(np.abs(imag.real))), 1e-300)
    imag_res = float(np.max(np.abs(imag.imag))) / scale
    if imag_res > 1e-12:
        raise ValidationError(f"kernel is not real (relative imaginary part {imag_res:.2e})")
    return RationalKernel(Q, P, right, left, tuple(terms), imag_res)


def fft_symbol_inversion(kernel: RationalKernel, t_max=10.0, xi_max=4000.0, dxi=0.05):
    """Trapezoid-rule inverse Fourier transform of the symbol via FFT.

    For a gap of 2 the slowly decaying part ``c/(1+xi^2)`` (``c`` from the
    leading coefficients) is subtracted and added back as ``c e^{-|t|}/2``.
    Returns ``(t, R)`` on the FFT grid restricted to ``|t| <= t_max``.
    """
    N = int(2 ** math.ceil(math.log2(2 * xi_max / dxi)))
    xi = (np.arange(N) - N // 2) * dxi
    S = kernel.symbol(xi)
    c = 0.0
    if kernel.gap == 2:
        c = -kernel.P.leading / kernel.Q.leading
        S = S - c / (1.0 + xi ** 2)
    # R(t_k) = (dxi / 2pi) sum_j S(xi_j) exp(i xi_j t_k), t_k = 2 pi k / (N dxi)
    dt = 2 * math.pi / (N * dxi)
    k = np.arange(N) - N // 2
    t = k * dt
    vals = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(S))) * N * dxi / (2 * math.pi)
    R = vals.real + c * np.exp(-np.abs(t)) / 2.0
    sel = np.abs(t) <= t_max
    return t[sel], R[sel]


# -- action of R on distributions -------------------------------------------

def _split_quadrature(kernel: RationalKernel, regular, x, L, panels, order):
    """``int_0^L R(x - y) regular(y) dy`` with panels split at ``y = x``."""
    t, w = gauss_legendre(order)
    u = (np.arange(panels)[:, None] + 0.5 * (t + 1.0)) / panels  # (panels, order) in [0,1]
    wu = np.broadcast_to(0.5 * w / panels, u.shape)
    u, wu = u.ravel(), wu.ravel()
    total = np.zeros_like(x)
    for lo, hi in ((np.zeros_like(x), x), (x, np.full_like(x, L))):
        length = hi - lo
        y = lo[:, None] + length[:, None] * u[None, :]
        K = kernel(x[:, None] - y)
        hy = regular(y.ravel()).reshape(y.shape)
        total += length * np.sum(K * hy * wu[None, :], axis=1)
    return total


def apply_kernel(kernel: RationalKernel, h, x, tol=1e-13, order=20, max_panels=256):
    """``(R h)(x)`` for a distributional solution ``h``.

    A ``delta^{(k)}(y - s)`` layer contributes ``R^{(k)}(x - s)``. The regular
    part uses Gauss-Legendre panels with ``y = x`` as a breakpoint; the panel
    count doubles until two successive estimates agree to ``tol``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    L = h.L
    panels = 4
    prev = _split_quadrature(kernel, h.regular, x, L, panels, order)
    while True:
        panels *= 2
        cur = _split_quadrature(kernel, h.regular, x, L, panels, order)
        if np.max(np.abs(cur - prev)) <= tol * max(1.0, float(np.max(np.abs(cur)))) or panels >= max_panels:
            break
        prev = cur
    out = cur
    for k, c in enumerate(h.delta0):
        if c != 0.0:
            out = out + c * kernel.derivative(k)(x)
    for k, c in enumerate(h.deltaL):
        if c != 0.0:
            out = out + c * kernel.derivative(k)(x - L)
    return out


def residual_grid(L, grid_size=1001, offset=1e-6):
    return np.linspace(offset, L - offset, grid_size)


def residual(kernel: RationalKernel, h, f, grid_size=1001):
    """``max |R h - f|`` on a uniform interior grid."""
    x = residual_grid(h.L, grid_size)
    return float(np.max(np.abs(apply_kernel(kernel, h, x) - f(x))))


# -- regularized equation -----------------------------------------------------

def graded_breaks(L, panels):
    """Panel boundaries clustered toward both endpoints (cosine map)."""
    u = np.linspace(0.0, 1.0, panels + 1)
    return 0.5 * L * (1.0 - np.cos(np.pi * u))


@dataclass
class NystromSolution:
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    epsilon: float
    condition: float
    breaks: np.ndarray
    order: int

    def __call__(self, x):
        """Panelwise Lagrange interpolation of the nodal values."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t, _ = gauss_legendre(self.order)
        idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.breaks) - 2)
        lo, hi = self.breaks[idx], self.breaks[idx + 1]
        s = 2.0 * (x - lo) / (hi - lo) - 1.0
        vals = self.values.reshape(-1, self.order)[idx]
        # barycentric weights for Legendre nodes
        bw = np.array([1.0 / np.prod(t[j] - np.delete(t, j)) for j in range(self.order)])
        diff = s[:, None] - t[None, :]
        exact = np.isclose(diff, 0.0, atol=1e-15)
        diff[exact] = 1.0
        terms = bw / diff
        out = np.sum(terms * vals, axis=1) / np.sum(terms, axis=1)
        hit = np.any(exact, axis=1)
        out[hit] = vals[hit][exact[hit]]
        return out


def _diagonal_correction(kernel, nodes, breaks, order):
    """Product-integration weights on each row's own panel.

    Replaces ``R(x_i - y_j) w_j`` inside the panel containing ``x_i`` by
    ``int R(x_i - y) l_j(y) dy`` (Lagrange basis ``l_j``), integrated exactly
    enough by Gauss rules on both sides of the kink at ``y = x_i``.
    """
    t, _ = gauss_legendre(order)
    sub_t, sub_w = gauss_legendre(2 * order)
    bw = np.array([1.0 / np.prod(t[j] - np.delete(t, j)) for j in range(order)])
    n_pan = len(breaks) - 1
    blocks = np.empty((n_pan, order, order))
    for p in range(n_pan):
        lo, hi = breaks[p], breaks[p + 1]
        xi = nodes[p * order:(p + 1) * order]
        for i in range(order):
            acc = np.zeros(order)
            for a, b in ((lo, xi[i]), (xi[i], hi)):
                y = 0.5 * (a + b) + 0.5 * (b - a) * sub_t
                wy = 0.5 * (b - a) * sub_w
                s = 2.0 * (y - lo) / (hi - lo) - 1.0
                # Lagrange basis values at s
                diff = s[:, None] - t[None, :]
                ell = np.prod(np.where(np.eye(order, dtype=bool)[None, :, :], 1.0, diff[:, None, :]), axis=2) * bw
                acc += (kernel(xi[i] - y) * wy) @ ell
            blocks[p, i] = acc
    return blocks


def nystrom_solve(kernel: RationalKernel, f, epsilon, N=800, L=1.0, order=8):
    """Solve ``s eps h + R h = f`` on ``[0, L]`` by Nystrom discretization.

    ``s`` is the sign of the kernel (+1 for a positive symbol), so the
    regularization always pushes the spectrum away from zero. Composite Gauss
    panels are graded toward both endpoints to resolve the boundary layers;
    the diagonal panel of each row uses product integration across the kink.
    """
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    sign = kernel.definiteness()
    if sign == 0:
        raise ValidationError("the regularized equation needs a sign-definite kernel")
    if N < 16:
        raise ValidationError("need at least 16 nodes")
    panels = max(2, N // order)
    breaks = graded_breaks(L, panels)
    nodes, weights = composite_gauss(breaks, order)
    A = kernel.matrix(nodes, nodes) * weights[None, :]
    blocks = _diagonal_correction(kernel, nodes, breaks, order)
    for p in range(panels):
        sl = slice(p * order, (p + 1) * order)
        A[sl, sl] = blocks[p]
    A[np.diag_indices_from(A)] += sign * epsilon
    lu, piv = scipy.linalg.lu_factor(A)
    anorm = np.max(np.sum(np.abs(A), axis=0))
    rcond, _ = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")
    cond = 1.0 / rcond if rcond > 0 else np.inf
    if cond > min(1e6 / epsilon, 1e13):
        raise IllConditioned(f"Nystrom matrix condition {cond:.3e} too large for eps = {epsilon}", cond)
    values = scipy.linalg.lu_solve((lu, piv), f(nodes))
    return NystromSolution(nodes, weights, values, float(epsilon), float(cond), breaks, order)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    interior_deviation: float
    mass0: float
    massL: float
    delta0: float
    deltaL: float
    condition: float
    layer_width: float


def perturbation_sweep(kernel: RationalKernel, f, epsilons, h, N=800, window=(0.2, 0.8)):
    """Compare regularized solutions with the distributional solution ``h``.

    Interior deviation is ``max |h_eps - regular|`` over nodes in
    ``[window[0] L, window[1] L]``. Boundary-layer mass at each end is the
    quadrature of ``h_eps - regular`` over a layer of width
    ``10 eps^{1/(n-m)}``; it should approach the order-0 delta coefficient.
    """
    L = h.L
    rows = []
    for eps in epsilons:
        sol = nystrom_solve(kernel, f, eps, N, L)
        dev = sol.values - h.regular(sol.nodes)
        lo, hi = window[0] * L, window[1] * L
        inner = (sol.nodes >= lo) & (sol.nodes <= hi)
        width = min(10.0 * eps ** (1.0 / kernel.gap), 0.5 * L)
        m0 = float(np.sum((sol.weights * dev)[sol.nodes <= width]))
        mL = float(np.sum((sol.weights * dev)[sol.nodes >= L - width]))
        d0 = float(h.delta0[0]) if h.delta0.size else 0.0
        dL = float(h.deltaL[0]) if h.deltaL.size else 0.0
        rows.append(SweepRow(float(eps), float(np.max(np.abs(dev[inner]))), m0, mL, d0, dL, sol.condition, width))
    return rows


def richardson_interior(kernel: RationalKernel, f, epsilons, x, N=800, L=1.0, exponent=None):
    """Extrapolate ``h_eps(x) -> h(x)`` on interior points.

    The interior error expands in powers of ``eps^exponent``; the default
    exponent is ``1 / gap``, the boundary-layer scaling. ``epsilons`` must be
    geometric and each Richardson level removes one power.
    """
    eps = np.asarray(epsilons, dtype=float)
    ratio = eps[0] / eps[1]
    if not np.allclose(eps[:-1] / eps[1:], ratio):
        raise ValidationError("Richardson extrapolation needs a geometric epsilon sequence")
    exponent = 1.0 / kernel.gap if exponent is None else exponent
    table = [nystrom_solve(kernel, f, e, N, L)(x) for e in eps]
    for level in range(1, len(eps)):
        factor = ratio ** (level * exponent)
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0) for i in range(len(table) - 1)]
    return table[0]
