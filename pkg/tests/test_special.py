import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from ordstat import (
    gaussian_orderstat_variance,
    log_binom,
    reg_inc_beta,
    reg_upper_inc_gamma,
)


class TestLogBinom:
    def test_choose_zero_is_one(self):
        assert log_binom(5, 0) == 0.0

    def test_hand_countable(self):
        assert log_binom(4, 2) == pytest.approx(math.log(6), abs=1e-12)

    def test_big_integer_oracle(self):
        # frozen from math.comb(50, 25) = 126410606437752
        exact = math.log(math.comb(50, 25))
        assert log_binom(50, 25) == pytest.approx(exact, rel=1e-10)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            log_binom(3, 4)
        with pytest.raises(ValueError):
            log_binom(3, -1)

    @given(n=st.integers(0, 300), k=st.integers(0, 300))
    @settings(max_examples=200, deadline=None)
    def test_symmetry_and_pascal(self, n, k):
        if k > n:
            return
        assert log_binom(n, k) == pytest.approx(log_binom(n, n - k), abs=1e-9)
        if 0 < k <= n:
            # C(n,k) = C(n-1,k-1) * n/k
            lhs = log_binom(n, k)
            rhs = log_binom(n - 1, k - 1) + math.log(n / k)
            assert lhs == pytest.approx(rhs, abs=1e-9)

    def test_vectorized(self):
        out = log_binom(np.array([4, 5]), np.array([2, 0]))
        assert out == pytest.approx([math.log(6), 0.0])


class TestRegUpperIncGamma:
    def test_at_zero_is_one(self):
        assert reg_upper_inc_gamma(3.7, 0.0) == 1.0

    def test_exponential_tail(self):
        assert reg_upper_inc_gamma(1.0, 2.0) == pytest.approx(math.exp(-2), abs=1e-12)

    def test_poisson_sum_identity(self):
        # Q(s, x) with integer s equals the Poisson(x) cdf at s-1.
        want = sum(math.exp(-2) * 2**k / math.factorial(k) for k in range(3))
        assert reg_upper_inc_gamma(3, 2.0) == pytest.approx(want, abs=1e-12)

    def test_poisson_cdf_grid(self):
        # direct-sum oracle over y in [0,60], several rates
        for mu in (0.1, 1.0, 5.0, 25.0):
            terms = np.exp(-mu) * np.cumprod(np.r_[1.0, mu / np.arange(1, 61)])
            csum = np.cumsum(terms)
            for y in range(61):
                assert reg_upper_inc_gamma(y + 1, mu) == pytest.approx(
                    csum[y], abs=1e-10
                )

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            reg_upper_inc_gamma(0.0, 1.0)
        with pytest.raises(ValueError):
            reg_upper_inc_gamma(1.0, -1.0)


class TestRegIncBeta:
    def test_endpoints(self):
        assert reg_inc_beta(2.0, 5.0, 0.0) == 0.0
        assert reg_inc_beta(2.0, 5.0, 1.0) == 1.0

    def test_uniform_case(self):
        assert reg_inc_beta(1.0, 1.0, 0.3) == pytest.approx(0.3, abs=1e-14)

    def test_quadrature_oracle(self):
        val, err = integrate.quad(lambda t: stats.beta.pdf(t, 2, 3), 0.0, 0.5)
        assert err < 1e-11
        assert reg_inc_beta(2.0, 3.0, 0.5) == pytest.approx(val, abs=1e-10)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            reg_inc_beta(-1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            reg_inc_beta(1.0, 1.0, 1.5)

    @given(
        a=st.floats(0.1, 20), b=st.floats(0.1, 20),
        x=st.floats(0.0, 1.0), y=st.floats(0.0, 1.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_x(self, a, b, x, y):
        lo, hi = min(x, y), max(x, y)
        assert reg_inc_beta(a, b, lo) <= reg_inc_beta(a, b, hi) + 1e-15


class TestGaussianOrderstatVariance:
    def test_single_draw(self):
        assert gaussian_orderstat_variance(1, 1) == 1.0

    def test_second_of_two(self):
        # the probit integrand has a mild endpoint singularity at (2,2);
        # 2048-node quadrature resolves it to ~5e-7
        assert gaussian_orderstat_variance(2, 2) == pytest.approx(
            (math.pi - 1) / math.pi, abs=2e-6
        )

    def test_median_of_three(self):
        assert gaussian_orderstat_variance(2, 3) == pytest.approx(
            (math.pi - math.sqrt(3)) / math.pi, abs=1e-8
        )

    def test_reflection_symmetry(self):
        for r, D in [(1, 5), (2, 7), (3, 9)]:
            assert gaussian_orderstat_variance(r, D) == pytest.approx(
                gaussian_orderstat_variance(D - r + 1, D), abs=1e-10
            )

    def test_monte_carlo_cross_check(self, rng):
        draws = rng.standard_normal((200000, 5))
        emp = np.sort(draws, axis=1)[:, 2].var()
        assert gaussian_orderstat_variance(3, 5) == pytest.approx(emp, abs=0.01)

    def test_rejects_bad_rank(self):
        with pytest.raises(ValueError):
            gaussian_orderstat_variance(0, 3)
        with pytest.raises(ValueError):
            gaussian_orderstat_variance(4, 3)
