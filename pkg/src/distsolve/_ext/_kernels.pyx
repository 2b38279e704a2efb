# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels; same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin

cnp.import_array()


cdef inline double _term_sum(double x, const double[:] coeff, const long[:] power,
                             const double[:] rate, const long[:] trig,
                             const double[:] freq) noexcept nogil:
    cdef Py_ssize_t j, k
    cdef double s = 0.0, v, xp
    for j in range(coeff.shape[0]):
        v = coeff[j]
        xp = 1.0
        for k in range(power[j]):
            xp *= x
        v *= xp
        if rate[j] != 0.0:
            v *= exp(rate[j] * x)
        if trig[j] == 1:
            v *= cos(freq[j] * x)
        elif trig[j] == 2:
            v *= sin(freq[j] * x)
        s += v
    return s


def eval_terms(x, coeff, power, rate, trig, freq):
    xa = np.asarray(x, dtype=np.float64)
    cdef const double[:] xf = np.ascontiguousarray(xa.reshape(-1))
    cdef const double[:] c = np.ascontiguousarray(coeff, dtype=np.float64)
    cdef const long[:] p = np.ascontiguousarray(power, dtype=np.int_)
    cdef const double[:] a = np.ascontiguousarray(rate, dtype=np.float64)
    cdef const long[:] t = np.ascontiguousarray(trig, dtype=np.int_)
    cdef const double[:] b = np.ascontiguousarray(freq, dtype=np.float64)
    out = np.empty(xf.shape[0], dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xf.shape[0]):
            o[i] = _term_sum(xf[i], c, p, a, t, b)
    return out.reshape(xa.shape)


def eval_two_sided(t, right, left):
    ta = np.asarray(t, dtype=np.float64)
    cdef const double[:] tf = np.ascontiguousarray(ta.reshape(-1))
    cdef const double[:] rc = np.ascontiguousarray(right[0], dtype=np.float64)
    cdef const long[:] rp = np.ascontiguousarray(right[1], dtype=np.int_)
    cdef const double[:] ra = np.ascontiguousarray(right[2], dtype=np.float64)
    cdef const long[:] rt = np.ascontiguousarray(right[3], dtype=np.int_)
    cdef const double[:] rb = np.ascontiguousarray(right[4], dtype=np.float64)
    cdef const double[:] lc = np.ascontiguousarray(left[0], dtype=np.float64)
    cdef const long[:] lp = np.ascontiguousarray(left[1], dtype=np.int_)
    cdef const double[:] la = np.ascontiguousarray(left[2], dtype=np.float64)
    cdef const long[:] lt = np.ascontiguousarray(left[3], dtype=np.int_)
    cdef const double[:] lb = np.ascontiguousarray(left[4], dtype=np.float64)
    out = np.empty(tf.shape[0], dtype=np.float64)
    cdef double[:] o = out
    cdef Py_ssize_t i
    cdef double ti
    with nogil:
        for i in range(tf.shape[0]):
            ti = tf[i]
            if ti >= 0.0:
                o[i] = _term_sum(ti, rc, rp, ra, rt, rb)
            else:
                o[i] = _term_sum(ti, lc, lp, la, lt, lb)
    return out.reshape(ta.shape)


def kernel_matrix(x, y, right, left):
    cdef const double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:] rc = np.ascontiguousarray(right[0], dtype=np.float64)
    cdef const long[:] rp = np.ascontiguousarray(right[1], dtype=np.int_)
    cdef const double[:] ra = np.ascontiguousarray(right[2], dtype=np.float64)
    cdef const long[:] rt = np.ascontiguousarray(right[3], dtype=np.int_)
    cdef const double[:] rb = np.ascontiguousarray(right[4], dtype=np.float64)
    cdef const double[:] lc = np.ascontiguousarray(left[0], dtype=np.float64)
    cdef const long[:] lp = np.ascontiguousarray(left[1], dtype=np.int_)
    cdef const double[:] la = np.ascontiguousarray(left[2], dtype=np.float64)
    cdef const long[:] lt = np.ascontiguousarray(left[3], dtype=np.int_)
    cdef const double[:] lb = np.ascontiguousarray(left[4], dtype=np.float64)
    out = np.empty((xv.shape[0], yv.shape[0]), dtype=np.float64)
    cdef double[:, :] o = out
    cdef Py_ssize_t i, j
    cdef double d
    with nogil:
        for i in range(xv.shape[0]):
            for j in range(yv.shape[0]):
                d = xv[i] - yv[j]
                if d >= 0.0:
                    o[i, j] = _term_sum(d, rc, rp, ra, rt, rb)
                else:
                    o[i, j] = _term_sum(d, lc, lp, la, lt, lb)
    return out
