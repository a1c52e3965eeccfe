"""Independent reference computations used only by the tests.

None of these import from ``spga``; they are deliberately naive.
"""

import math

import numpy as np


def _t_pdf(s, df):
    log_norm = (
        math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df) - 0.5 * math.log(df * math.pi)
    )
    return math.exp(log_norm - 0.5 * (df + 1) * math.log1p(s * s / df))


def _adaptive_simpson(f, a, b, tol, max_depth=60):
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(
            m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
        )

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def t_upper_tail(t, df, tol=1e-13):
    """P(T > t) for t >= 0 by adaptive Simpson quadrature of the density.

    Beyond t = 1 the tail is integrated after substituting s = 1/u, which
    maps [t, inf) onto the finite interval (0, 1/t].
    """
    if t <= 1.0:
        central = _adaptive_simpson(lambda s: _t_pdf(s, df), 0.0, t, tol)
        return 0.5 - central

    def g(u):
        if u == 0.0:
            # f(1/u)/u^2 ~ C u^(df - 1) as u -> 0
            return _t_pdf_tail_limit(df)
        s = 1.0 / u
        return _t_pdf(s, df) / (u * u)

    return _adaptive_simpson(g, 0.0, 1.0 / t, tol)


def _t_pdf_tail_limit(df):
    if df > 1:
        return 0.0
    # df = 1: f(1/u)/u^2 = 1 / (pi (u^2 + 1)) -> 1/pi
    return 1.0 / math.pi


def t_cdf(t, df):
    if t >= 0:
        return 1.0 - t_upper_tail(t, df)
    return t_upper_tail(-t, df)


def t_critical_by_bisection(alpha, df):
    """Two-sided critical value by plain bisection on the quadrature tail."""
    target = 0.5 * alpha
    lo, hi = 0.0, 1.0
    while t_upper_tail(hi, df) > target:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_upper_tail(mid, df) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def normal_two_sided_critical(alpha):
    """Normal quantile via bisection on math.erf (the inverse-erf oracle)."""
    lo, hi = 0.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.erfc(mid / math.sqrt(2.0)) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def direct_window_counts(gradients, epsilon):
    """O(N^2) count of k with g_i - eps/2 <= g_k < g_i + eps/2."""
    g = np.asarray(gradients, dtype=float)
    half = epsilon / 2.0
    lo = g - half
    hi = g + half
    return ((g[None, :] >= lo[:, None]) & (g[None, :] < hi[:, None])).sum(axis=1)


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def ce_of_logit(x, y):
    p = sigmoid(x)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def central_difference(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def numeric_gradient(f, theta, h=1e-6):
    theta = np.array(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (f(up) - f(dn)) / (2.0 * h)
    return grad


def relative_error(a, b, floor=1e-12):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / scale)
