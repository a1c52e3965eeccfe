"""Pure-Python kernels, used when the compiled ``_core`` extension is absent."""

import numpy as np

CF_MAX_ITER = 100000
CF_EPS = 1e-15
CF_FPMIN = 1e-300


def window_counts(sorted_vals, half_width):
    """Count, for each sorted value g_i, the values g_k with
    ``g_i - half_width <= g_k < g_i + half_width``."""
    vals = [float(v) for v in sorted_vals]
    n = len(vals)
    out = np.empty(n, dtype=np.int64)
    lo = hi = 0
    for i, g in enumerate(vals):
        lo_edge = g - half_width
        hi_edge = g + half_width
        while vals[lo] < lo_edge:
            lo += 1
        if hi < i:
            hi = i
        while hi < n and vals[hi] < hi_edge:
            hi += 1
        out[i] = hi - lo
    return out


def beta_cf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < CF_FPMIN:
        d = CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < CF_FPMIN:
            d = CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < CF_FPMIN:
            c = CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < CF_FPMIN:
            d = CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < CF_FPMIN:
            c = CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")
