"""Gauss-Legendre panel quadrature."""

from functools import lru_cache

import numpy as np

from .errors import QuadratureFailure


@lru_cache(maxsize=32)
def gauss_legendre(order):
    return np.polynomial.legendre.leggauss(order)


def _panel(func, a, b, order):
    """Panel integral and the integral of ``|func|`` (the roundoff scale)."""
    t, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    y = 0.5 * (a + b) + half * t
    vals = np.asarray(func(y))
    return half * np.tensordot(w, vals, axes=(0, 0)), half * float(np.max(np.tensordot(w, np.abs(vals), axes=(0, 0))))


def adaptive_gauss_legendre(func, a, b, tol=1e-12, order=20, max_panels=4096, breakpoints=()):
    """Integrate a vectorized ``func`` over ``[a, b]``.

    ``func`` maps an array of nodes to values of shape ``(nodes,)`` or
    ``(nodes, k)``. Panels are bisected until the one-panel and two-half-panel
    estimates agree to ``tol`` relative to ``max(1, int |func|)`` over the panel,
    so cancellation inside a panel cannot stall the refinement. ``breakpoints``
    inside ``(a, b)`` are always panel boundaries.
    """
    if a == b:
        return np.asarray(func(np.array([a]))[0]) * 0.0
    cuts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    stack = [(cuts[i], cuts[i + 1], _panel(func, cuts[i], cuts[i + 1], order)[0]) for i in range(len(cuts) - 1)]
    total = 0.0
    n_panels = 0
    while stack:
        lo, hi, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        left, mag_l = _panel(func, lo, mid, order)
        right, mag_r = _panel(func, mid, hi, order)
        both = left + right
        n_panels += 1
        err = np.max(np.abs(both - whole))
        if err <= tol * max(1.0, mag_l + mag_r) or hi - lo < 1e-13 * max(1.0, abs(b - a)):
            total = total + both
            continue
        if n_panels > max_panels:
            raise QuadratureFailure(f"adaptive quadrature did not converge on [{a}, {b}] (error {err:.3e})")
        stack.append((lo, mid, left))
        stack.append((mid, hi, right))
    return total


def composite_gauss(breaks, order):
    """Nodes and weights of a composite Gauss-Legendre rule on ``breaks``."""
    t, w = gauss_legendre(order)
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()
