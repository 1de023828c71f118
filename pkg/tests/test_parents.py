import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordstat import (
    NegBinParent,
    PoissonParent,
    SupportRegion,
    negbin_cdf,
    poisson_cdf,
    sample_truncated,
)


class TestPoissonParent:
    def test_cdf_below_support(self):
        assert poisson_cdf(2.0, -1) == 0.0

    def test_cdf_at_zero(self):
        assert poisson_cdf(2.0, 0) == pytest.approx(math.exp(-2), abs=1e-12)

    def test_cdf_at_one(self):
        assert poisson_cdf(2.0, 1) == pytest.approx(3 * math.exp(-2), abs=1e-12)

    def test_pmf_matches_cdf_increments(self):
        p = PoissonParent(3.5)
        z = np.arange(30)
        np.testing.assert_allclose(p.pmf(z), p.cdf(z) - p.cdf(z - 1), atol=1e-12)

    def test_sf_complements_cdf(self):
        p = PoissonParent(7.0)
        z = np.arange(-1, 40)
        np.testing.assert_allclose(p.sf(z), 1.0 - p.cdf(z), atol=1e-12)

    def test_ppf_inverts_cdf(self):
        p = PoissonParent(4.0)
        for q in (0.01, 0.3, 0.5, 0.9, 0.999):
            z = int(p.ppf(q))
            assert p.cdf(z) >= q and p.cdf(z - 1) < q

    def test_quantile_bound_is_sound(self):
        p = PoissonParent(5.0)
        b = p.quantile_bound(1e-12)
        assert float(p.sf(b)) <= 1e-12

    def test_rejects_nonpositive_mu(self):
        with pytest.raises(ValueError):
            PoissonParent(0.0)

    def test_array_params_and_take(self):
        p = PoissonParent(np.array([1.0, 10.0]))
        out = p.cdf(np.array([0, 0]))
        assert out[0] == pytest.approx(math.exp(-1))
        sub = p.take(np.array([1]))
        assert sub.cdf(0) == pytest.approx(math.exp(-10))


class TestNegBinParent:
    def test_cdf_below_support(self):
        assert negbin_cdf(3.0, 0.4, -1) == 0.0

    def test_geometric_pmf_at_zero(self):
        # alpha=1 collapses to geometric with pmf(0) = p
        assert NegBinParent(1.0, 0.5).pmf(0) == pytest.approx(0.5, abs=1e-12)

    def test_cdf_matches_pmf_sum(self):
        p = NegBinParent(3.0, 0.4)
        want = float(np.sum(p.pmf(np.arange(6))))
        assert negbin_cdf(3.0, 0.4, 5) == pytest.approx(want, abs=1e-10)

    def test_mean_and_dispersion(self, rng):
        p = NegBinParent(5.0, 0.3)
        assert p.mean() == pytest.approx(5 * 0.7 / 0.3)
        draws = p.sample(rng, size=200000)
        assert draws.mean() == pytest.approx(p.mean(), rel=0.02)
        assert draws.var() / draws.mean() == pytest.approx(1 / 0.3, rel=0.05)

    def test_sf_complements_cdf(self):
        p = NegBinParent(2.0, 0.5)
        z = np.arange(-1, 50)
        np.testing.assert_allclose(p.sf(z), 1.0 - p.cdf(z), atol=1e-12)

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            NegBinParent(-1.0, 0.5)
        with pytest.raises(ValueError):
            NegBinParent(1.0, 1.0)

    @given(alpha=st.floats(0.2, 30), p=st.floats(0.05, 0.95), z=st.integers(0, 60))
    @settings(max_examples=100, deadline=None)
    def test_cdf_monotone_and_bounded(self, alpha, p, z):
        parent = NegBinParent(alpha, p)
        lo, hi = float(parent.cdf(z)), float(parent.cdf(z + 1))
        assert 0.0 <= lo <= hi <= 1.0


class TestSupportRegion:
    def test_constructors(self):
        assert SupportRegion.full().kind == "full"
        assert SupportRegion.at_least(3).y == 3

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            SupportRegion("sideways", 1)

    def test_rejects_missing_threshold(self):
        with pytest.raises(ValueError):
            SupportRegion("below")


class TestSampleTruncated:
    def test_equal_region_is_singleton(self, rng):
        assert sample_truncated(PoissonParent(3.0), SupportRegion.equal(7), rng) == 7

    def test_below_one_forces_zero(self, rng):
        out = sample_truncated(PoissonParent(3.0), SupportRegion.below(1), rng, size=50)
        assert np.all(out == 0)

    def test_at_least_matches_renormalized_pmf(self, rng):
        p = PoissonParent(2.0)
        draws = sample_truncated(p, SupportRegion.at_least(4), rng, size=100000)
        assert draws.min() >= 4
        z = np.arange(4, 40)
        want = p.pmf(z) / float(p.sf(3))
        emp = np.bincount(draws, minlength=40)[4:40] / draws.size
        tv = 0.5 * np.abs(want - emp).sum()
        assert tv < 0.01

    def test_at_most_matches_renormalized_pmf(self, rng):
        p = NegBinParent(2.0, 0.5)
        draws = sample_truncated(p, SupportRegion.at_most(3), rng, size=100000)
        assert draws.max() <= 3
        z = np.arange(4)
        want = p.pmf(z) / float(p.cdf(3))
        emp = np.bincount(draws, minlength=4) / draws.size
        assert 0.5 * np.abs(want - emp).sum() < 0.01

    def test_empty_region_raises(self, rng):
        with pytest.raises(ValueError):
            sample_truncated(PoissonParent(3.0), SupportRegion.below(0), rng)

    def test_deep_tail_region_stays_exact(self, rng):
        # conditioning far above the mean must not loop or return < y
        p = PoissonParent(1.0)
        draws = sample_truncated(p, SupportRegion.at_least(30), rng, size=1000)
        assert draws.min() >= 30

    def test_full_region_matches_parent(self, rng):
        p = PoissonParent(2.0)
        draws = sample_truncated(p, SupportRegion.full(), rng, size=100000)
        z = np.arange(20)
        emp = np.bincount(draws, minlength=20)[:20] / draws.size
        assert 0.5 * np.abs(p.pmf(z) - emp).sum() < 0.01
