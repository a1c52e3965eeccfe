import math

import mpmath
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from spga.tdist import (
    TQuery,
    log_beta,
    log_gamma,
    reg_inc_beta,
    t_two_sided_critical,
    t_two_sided_tail,
)

from oracles import normal_two_sided_critical, t_cdf, t_critical_by_bisection

# Frozen from the quadrature oracle (oracles.t_critical_by_bisection).
ORACLE_CRITICAL = {
    (0.01, 1): 63.656741162873004,
    (0.05, 1): 12.70620473617464,
    (0.05, 4): 2.776445105197695,
    (0.05, 5): 2.5705818356362897,
    (0.05, 31): 2.03951344639637,
    (0.1, 10): 1.812461122811726,
    (0.01, 200): 2.6006344361916263,
}


class TestLogGamma:
    @pytest.mark.parametrize("z, expected", [(1.0, 0.0), (2.0, 0.0), (0.5, 0.5723649429247001)])
    def test_known_values(self, z, expected):
        assert abs(log_gamma(z) - expected) < 1e-12

    def test_half_is_log_sqrt_pi(self):
        assert abs(log_gamma(0.5) - 0.5 * math.log(math.pi)) < 1e-12

    @pytest.mark.parametrize("z", [0.0, -1.0, -0.5, math.inf, math.nan])
    def test_domain(self, z):
        with pytest.raises(ValueError):
            log_gamma(z)

    def test_against_high_precision(self):
        # 1e-12 absolute wherever binary64 can hold it; above ~z=700 the
        # value itself is larger than 2**12 and the bound becomes a few ulp.
        mpmath.mp.dps = 40
        zs = [0.5 + 0.37 * k for k in range(300)] + [10.0 ** (k / 10) for k in range(0, 61)]
        for z in zs:
            ref = mpmath.loggamma(z)
            err = abs(mpmath.mpf(log_gamma(z)) - ref)
            bound = max(1e-12, 4 * math.ulp(float(ref)))
            assert err < bound, (z, float(err))

    @given(st.floats(min_value=0.5, max_value=1e4))
    def test_recurrence(self, z):
        assert log_gamma(z + 1) - log_gamma(z) == pytest.approx(math.log(z), abs=1e-9)


class TestIncompleteBeta:
    @given(st.floats(0.01, 50), st.floats(0.01, 50))
    def test_endpoints(self, a, b):
        assert reg_inc_beta(0.0, a, b) == 0.0
        assert reg_inc_beta(1.0, a, b) == 1.0

    def test_symmetric_half(self):
        assert reg_inc_beta(0.5, 3, 3) == pytest.approx(0.5, abs=1e-14)

    @pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 17.0, 400.0])
    def test_symmetric_half_general(self, a):
        assert reg_inc_beta(0.5, a, a) == pytest.approx(0.5, abs=1e-12)

    @given(st.floats(0.0, 1.0), st.floats(0.05, 200), st.floats(0.05, 200))
    @settings(max_examples=200)
    def test_reflection(self, x, a, b):
        x = 1.0 - (1.0 - x)  # make the complement exact
        assert reg_inc_beta(x, a, b) + reg_inc_beta(1.0 - x, b, a) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize(
        "x, a, b",
        [(0.3, 2.0, 5.0), (0.9, 0.5, 0.5), (0.01, 0.2, 3.0), (0.999, 50.0, 0.5), (0.48, 300.0, 310.0)],
    )
    def test_against_mpmath(self, x, a, b):
        mpmath.mp.dps = 30
        ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
        assert abs(reg_inc_beta(x, a, b) - ref) < 1e-10

    def test_closed_form_a1(self):
        # I_x(1, b) = 1 - (1 - x)^b
        for x in (0.1, 0.4, 0.77):
            for b in (0.5, 2.0, 9.0):
                assert reg_inc_beta(x, 1.0, b) == pytest.approx(1 - (1 - x) ** b, abs=1e-13)

    @pytest.mark.parametrize("args", [(-0.1, 1, 1), (1.1, 1, 1), (0.5, 0, 1), (0.5, 1, -2)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            reg_inc_beta(*args)


def test_log_beta_large_small_matches_mpmath():
    mpmath.mp.dps = 40
    for a, b in [(5e5, 0.5), (1e3, 2.5), (12.0, 12.0), (3.0, 0.5)]:
        ref = mpmath.log(mpmath.beta(a, b))
        assert abs(log_beta(a, b) - float(ref)) < 1e-11


class TestQuery:
    @pytest.mark.parametrize("alpha", [0.0, -0.1, 1.0000001, math.nan])
    def test_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            TQuery(alpha, 5)

    @pytest.mark.parametrize("df", [0, -3, 2.5, True])
    def test_bad_df(self, df):
        with pytest.raises(ValueError):
            TQuery(0.05, df)

    def test_integral_float_df_accepted(self):
        assert TQuery(0.05, 4.0).df == 4


class TestCritical:
    def test_alpha_one_is_median(self):
        assert t_two_sided_critical(TQuery(1.0, 5)) == 0.0

    def test_cauchy_closed_form(self):
        assert t_two_sided_critical(TQuery(0.05, 1)) == pytest.approx(
            math.tan(0.475 * math.pi), abs=1e-6
        )

    def test_df31(self):
        assert abs(t_two_sided_critical(TQuery(0.05, 31)) - 2.039513) < 1e-5

    @pytest.mark.parametrize("key", sorted(ORACLE_CRITICAL))
    def test_frozen_oracle_values(self, key):
        assert t_two_sided_critical(TQuery(*key)) == pytest.approx(ORACLE_CRITICAL[key], abs=1e-9)

    def test_oracle_still_reproduces_frozen_values(self):
        for (alpha, df), value in list(ORACLE_CRITICAL.items())[:3]:
            assert t_critical_by_bisection(alpha, df) == pytest.approx(value, abs=1e-11)

    @pytest.mark.parametrize("alpha, df", [(0.05, 1), (0.1, 3), (0.01, 12), (0.2, 50)])
    def test_symmetry_against_quadrature_cdf(self, alpha, df):
        t = t_two_sided_critical(TQuery(alpha, df))
        assert t_cdf(t, df) - t_cdf(-t, df) == pytest.approx(1 - alpha, abs=1e-9)

    def test_converged_tail(self):
        for alpha, df in [(0.05, 1), (0.01, 31), (0.3, 7)]:
            t = t_two_sided_critical(TQuery(alpha, df))
            assert abs(t_two_sided_tail(t, df) - alpha) < 1e-12

    def test_normal_limit(self):
        z = normal_two_sided_critical(0.05)
        assert abs(z - 1.959964) < 1e-6
        assert abs(t_two_sided_critical(TQuery(0.05, 10**6)) - z) < 1e-4

    @given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), st.integers(1, 500))
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_alpha(self, a1, a2, df):
        lo, hi = sorted((a1, a2))
        assume(hi - lo > 1e-9 * hi)
        assert t_two_sided_critical(TQuery(lo, df)) > t_two_sided_critical(TQuery(hi, df))

    @given(st.sampled_from([0.01, 0.05, 0.1, 0.5]), st.integers(1, 300))
    @settings(max_examples=60, deadline=None)
    def test_non_increasing_in_df(self, alpha, df):
        assert t_two_sided_critical(TQuery(alpha, df + 1)) <= t_two_sided_critical(
            TQuery(alpha, df)
        )

    def test_requires_tquery(self):
        with pytest.raises(TypeError):
            t_two_sided_critical((0.05, 3))
