# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Must stay behaviourally identical to ``_core_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

cdef int CF_MAX_ITER = 100000
cdef double CF_EPS = 1e-15
cdef double CF_FPMIN = 1e-300


def window_counts(const double[::1] sorted_vals, double half_width):
    """Count, for each sorted value g_i, the values g_k with
    ``g_i - half_width <= g_k < g_i + half_width``."""
    cdef Py_ssize_t n = sorted_vals.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i, lo = 0, hi = 0
    cdef double g, lo_edge, hi_edge
    for i in range(n):
        g = sorted_vals[i]
        lo_edge = g - half_width
        hi_edge = g + half_width
        while sorted_vals[lo] < lo_edge:
            lo += 1
        if hi < i:
            hi = i
        while hi < n and sorted_vals[hi] < hi_edge:
            hi += 1
        out[i] = hi - lo
    return out


def beta_cf(double a, double b, double x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    cdef double qab = a + b, qap = a + 1.0, qam = a - 1.0
    cdef double c = 1.0, d = 1.0 - qab * x / qap
    cdef double h, aa, delta
    cdef int m, m2
    if fabs(d) < CF_FPMIN:
        d = CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < CF_FPMIN:
            d = CF_FPMIN
        c = 1.0 + aa / c
        if fabs(c) < CF_FPMIN:
            c = CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < CF_FPMIN:
            d = CF_FPMIN
        c = 1.0 + aa / c
        if fabs(c) < CF_FPMIN:
            c = CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")
