"""Student's t critical values from scratch.

``log_gamma`` -> ``log_beta`` -> ``reg_inc_beta`` -> ``t_two_sided_critical``.
Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels

__all__ = [
    "TQuery",
    "log_gamma",
    "log_beta",
    "reg_inc_beta",
    "t_two_sided_tail",
    "t_density",
    "t_two_sided_critical",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
# Stirling series coefficients B_2k / (2k (2k - 1)), k = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_STIRLING_MIN = 10.0


@dataclass(frozen=True)
class TQuery:
    """Two-sided significance level and (integer) degrees of freedom."""

    alpha: float
    df: int

    def __post_init__(self):
        if isinstance(self.df, bool) or not isinstance(self.df, int):
            if isinstance(self.df, float) and self.df.is_integer():
                object.__setattr__(self, "df", int(self.df))
            else:
                raise ValueError(f"df must be an integer >= 1, got {self.df!r}")
        if self.df < 1:
            raise ValueError(f"df must be an integer >= 1, got {self.df!r}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha!r}")


def _stirling_correction(z: float) -> float:
    # ln Gamma(z) - [(z - 1/2) ln z - z + ln sqrt(2 pi)], valid for z >= 10
    zi = 1.0 / z
    zi2 = zi * zi
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * zi2 + c
    return acc * zi


def log_gamma(z: float) -> float:
    """Natural log of the gamma function for ``z > 0``.

    Arguments below 10 are shifted up with the recurrence
    ``Gamma(z + 1) = z Gamma(z)`` and the Stirling series is evaluated there.
    """
    z = float(z)
    if not (z > 0.0) or math.isinf(z):
        raise ValueError(f"log_gamma requires a finite z > 0, got {z!r}")
    if z == 1.0 or z == 2.0:
        return 0.0
    shift = 1.0
    while z < _STIRLING_MIN:
        shift *= z
        z += 1.0
    value = (z - 0.5) * math.log(z) - z + _HALF_LOG_2PI + _stirling_correction(z)
    return value - math.log(shift)


def _log_gamma_ratio(big: float, small: float) -> float:
    # ln Gamma(big) - ln Gamma(big + small), big >= 10, without cancellation
    total = big + small
    return (
        -(big - 0.5) * math.log1p(small / big)
        - small * math.log(total)
        + small
        + _stirling_correction(big)
        - _stirling_correction(total)
    )


def log_beta(a: float, b: float) -> float:
    """ln B(a, b) for positive ``a``, ``b``."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"log_beta requires a, b > 0, got {a!r}, {b!r}")
    big, small = (a, b) if a >= b else (b, a)
    if big >= _STIRLING_MIN:
        return log_gamma(small) + _log_gamma_ratio(big, small)
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def _reg_inc_beta(x: float, y: float, a: float, b: float) -> float:
    # x + y == 1 in exact arithmetic; y is passed separately so callers can
    # keep full precision in whichever of the two is small.
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log(y) - log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * kernels.beta_cf(a, b, x) / a
    return 1.0 - math.exp(log_front) * kernels.beta_cf(b, a, y) / b


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    x : float
        Upper integration limit, in [0, 1].
    a, b : float
        Positive shape parameters.

    Returns
    -------
    float
        I_x(a, b) in [0, 1].
    """
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"reg_inc_beta requires 0 <= x <= 1, got {x!r}")
    if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
        raise ValueError(f"reg_inc_beta requires finite a, b > 0, got {a!r}, {b!r}")
    return _reg_inc_beta(x, 1.0 - x, float(a), float(b))


def t_two_sided_tail(t: float, df: int) -> float:
    """P(|T| > t) for a t variable with ``df`` degrees of freedom, ``t >= 0``."""
    t = abs(float(t))
    if math.isinf(t):
        return 0.0
    t2 = t * t
    denom = df + t2
    return _reg_inc_beta(df / denom, t2 / denom, 0.5 * df, 0.5)


def t_density(t: float, df: int) -> float:
    """Probability density of the t distribution."""
    log_norm = -0.5 * math.log(df) - log_beta(0.5 * df, 0.5)
    return math.exp(log_norm - 0.5 * (df + 1) * math.log1p(t * t / df))


def t_two_sided_critical(q: TQuery, tol: float = 1e-12) -> float:
    """Critical value t* >= 0 with P(|T_df| > t*) = alpha.

    Brackets the root, then alternates Newton steps with bisection whenever a
    Newton step would leave the bracket. Stops once the tail probability is
    within ``tol`` of ``alpha`` (or the bracket has collapsed to rounding).
    """
    if not isinstance(q, TQuery):
        raise TypeError("expected a TQuery")
    alpha, df = q.alpha, q.df
    if alpha == 1.0:
        return 0.0

    lo, hi = 0.0, 1.0
    while t_two_sided_tail(hi, df) > alpha:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise ArithmeticError("could not bracket the t critical value")

    t = 0.5 * (lo + hi)
    for _ in range(200):
        resid = t_two_sided_tail(t, df) - alpha
        if abs(resid) < tol:
            return t
        # tail decreases in t
        if resid > 0.0:
            lo = t
        else:
            hi = t
        if hi - lo <= 4.0 * math.ulp(hi):
            return t
        slope = -2.0 * t_density(t, df)
        step = t - resid / slope if slope != 0.0 else math.nan
        t = step if lo < step < hi else 0.5 * (lo + hi)
    return t
