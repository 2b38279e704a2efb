"""NumPy reference implementation of the evaluation kernels.

Term tables are five parallel 1-D arrays ``(coeff, power, rate, trig, freq)``
describing ``coeff * x**power * exp(rate*x) * T(freq*x)`` with ``trig`` codes
0 (T = 1), 1 (cos) and 2 (sin).
"""

import numpy as np


def eval_terms(x, coeff, power, rate, trig, freq):
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    if coeff.size == 0:
        return np.zeros_like(x)
    X = flat[:, None]
    vals = coeff * X ** power * np.exp(rate * X)
    arg = freq * X
    vals = np.where(trig == 1, vals * np.cos(arg), np.where(trig == 2, vals * np.sin(arg), vals))
    return vals.sum(axis=1).reshape(x.shape)


def eval_two_sided(t, right, left):
    """Evaluate ``right`` where t >= 0 and ``left`` where t < 0."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = eval_terms(t[pos], *right)
    out[~pos] = eval_terms(t[~pos], *left)
    return out


def kernel_matrix(x, y, right, left):
    """Matrix ``K[i, j] = R(x[i] - y[j])`` for a two-sided term table."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return eval_two_sided(x[:, None] - y[None, :], right, left)
