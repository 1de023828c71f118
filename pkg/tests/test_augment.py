import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ordstat import (
    AugmentedDraw,
    Category,
    NegBinParent,
    OrderSpec,
    OrderStatDistribution,
    PoissonParent,
    SufficientStats,
    brute_force_conditional,
    category_probs,
    prob_os_equals_y,
    sample_conditional,
)
from ordstat.augment import brute_force_arrays, sample_conditional_batch


def _oracle_zmax(parent, y):
    return max(int(parent.quantile_bound(1e-11)), y + 1)


class TestProbOsEqualsY:
    def test_too_many_below_is_impossible(self):
        spec = OrderSpec(2, 4)
        out = prob_os_equals_y(SufficientStats(2, 0, 0), 3, spec, PoissonParent(2.0))
        assert out == 0.0

    def test_no_conditioning_is_marginal_pmf(self):
        parent = PoissonParent(2.0)
        for r, D, Y in [(1, 1, 0), (2, 3, 2), (3, 4, 1), (1, 4, 5)]:
            spec = OrderSpec(r, D)
            want = OrderStatDistribution(parent, spec).pmf(Y)
            got = prob_os_equals_y(SufficientStats(0, 0, 0), Y, spec, parent)
            assert got == pytest.approx(want, abs=1e-12)

    def test_one_below_matches_enumeration(self):
        # Pois(2), r=2, D=3, Y=2, one draw already below: equals the
        # two-remaining-draw order-statistic pmf and the enumeration oracle
        parent = PoissonParent(2.0)
        spec = OrderSpec(2, 3)
        got = prob_os_equals_y(SufficientStats(1, 0, 0), 2, spec, parent)
        sub = OrderStatDistribution(parent, OrderSpec(1, 2))
        assert got == pytest.approx(sub.pmf(2), abs=1e-12)
        # enumeration over z1 < 2, z2, z3 free
        z = np.arange(15)
        pz = parent.pmf(z)
        num, den = 0.0, 0.0
        for z1 in range(2):
            for z2 in range(15):
                for z3 in range(15):
                    w = pz[z1] * pz[z2] * pz[z3]
                    den += w
                    if sorted((z1, z2, z3))[1] == 2:
                        num += w
        assert got == pytest.approx(num / den, abs=1e-6)

    def test_rejects_overfull_stats(self):
        with pytest.raises(ValueError):
            prob_os_equals_y(SufficientStats(2, 2, 0), 1, OrderSpec(1, 3),
                             PoissonParent(1.0))

    @given(
        mu=st.floats(0.3, 8), D=st.integers(1, 6), Y=st.integers(0, 8),
        data=st.data(),
    )
    @settings(max_examples=150, deadline=None)
    def test_is_a_probability(self, mu, D, Y, data):
        r = data.draw(st.integers(1, D))
        n1 = data.draw(st.integers(0, D))
        n2 = data.draw(st.integers(0, D - n1))
        n3 = data.draw(st.integers(0, D - n1 - n2))
        out = prob_os_equals_y(SufficientStats(n1, n2, n3), Y, OrderSpec(r, D),
                               PoissonParent(mu))
        assert 0.0 <= out <= 1.0 + 1e-12


class TestCategoryProbs:
    def test_minimum_admits_nothing_below(self):
        parent = PoissonParent(2.0)
        pb, pe, pa = category_probs(SufficientStats(0, 1, 0), 2, OrderSpec(1, 3), parent)
        assert pb == 0.0
        assert pe + pa == pytest.approx(1.0, abs=1e-12)

    def test_single_draw_must_equal(self):
        probs = category_probs(SufficientStats(0, 0, 0), 4, OrderSpec(1, 1),
                               PoissonParent(2.0))
        assert probs == (0.0, 1.0, 0.0)

    def test_matches_enumeration_oracle(self):
        # category of the first coordinate from the full joint oracle
        parent = PoissonParent(2.0)
        spec = OrderSpec(2, 3)
        Y = 2
        cond = brute_force_conditional(Y, spec, parent, _oracle_zmax(parent, Y))
        want = [0.0, 0.0, 0.0]
        for t, p in cond.items():
            z1 = t[0]
            want[0 if z1 < Y else (1 if z1 == Y else 2)] += p
        got = category_probs(SufficientStats(0, 0, 0), Y, spec, parent)
        np.testing.assert_allclose(got, want, atol=1e-9)

    def test_sequential_chain_matches_oracle(self):
        # peel two coordinates of a D=3 instance by hand and compare the
        # resulting category chain against the joint oracle
        parent = NegBinParent(2.0, 0.5)
        spec = OrderSpec(2, 3)
        Y = 1
        cond = brute_force_conditional(Y, spec, parent, _oracle_zmax(parent, Y))
        # oracle: P(cat1=below, cat2=equal)
        want = sum(p for t, p in cond.items() if t[0] < Y and t[1] == Y)
        p1 = category_probs(SufficientStats(0, 0, 0), Y, spec, parent)[0]
        p2 = category_probs(SufficientStats(1, 0, 0), Y, spec, parent)[1]
        assert p1 * p2 == pytest.approx(want, abs=1e-9)

    def test_rejects_fully_revealed(self):
        with pytest.raises(ValueError):
            category_probs(SufficientStats(0, 1, 0), 2, OrderSpec(1, 1),
                           PoissonParent(2.0))

    @given(
        mu=st.floats(0.3, 8), D=st.integers(2, 6), Y=st.integers(0, 7),
        data=st.data(),
    )
    @settings(max_examples=150, deadline=None)
    def test_normalized_and_nonnegative(self, mu, D, Y, data):
        r = data.draw(st.integers(1, D))
        parent = PoissonParent(mu)
        spec = OrderSpec(r, D)
        # pick a reachable partial state: n1 <= r-1, n3 <= D-r
        n1 = data.draw(st.integers(0, r - 1))
        n3 = data.draw(st.integers(0, min(D - r, D - 1 - n1)))
        n2 = data.draw(st.integers(0, D - 1 - n1 - n3))
        stats = SufficientStats(n1, n2, n3)
        if prob_os_equals_y(stats, Y, spec, parent) <= 1e-290:
            return
        probs = category_probs(stats, Y, spec, parent)
        assert min(probs) >= 0.0
        assert sum(probs) == pytest.approx(1.0, abs=1e-9)


class TestSampleConditional:
    def test_max_at_zero_takes_shortcut(self, rng):
        draw = sample_conditional(0, OrderSpec(4, 4), PoissonParent(2.0), rng)
        assert draw.values == [0, 0, 0, 0]
        assert draw.n_categorical_steps == 0

    def test_min_deep_in_tail_pins_all_values(self, rng):
        # a minimum far above the mean forces every coordinate to Y, either
        # via the degenerate shortcut or an immediate break
        parent = PoissonParent(0.1)
        draw = sample_conditional(40, OrderSpec(1, 3), parent, rng)
        assert draw.values == [40, 40, 40]
        assert draw.n_categorical_steps <= 1

    def test_single_draw_is_y(self, rng):
        draw = sample_conditional(5, OrderSpec(1, 1), PoissonParent(2.0), rng)
        assert draw.values == [5]
        assert draw.categories == [Category.EQUAL]

    def test_returns_augmented_draw(self, rng):
        draw = sample_conditional(2, OrderSpec(2, 3), PoissonParent(2.0), rng)
        assert isinstance(draw, AugmentedDraw)
        assert len(draw.values) == 3
        assert sorted(draw.values)[1] == 2

    def test_constraint_always_holds(self, rng):
        for parent in (PoissonParent(2.0), NegBinParent(2.0, 0.5)):
            for r, D in [(1, 2), (2, 2), (1, 4), (3, 4), (4, 4)]:
                dist = OrderStatDistribution(parent, OrderSpec(r, D))
                ys = [y for y in range(7) if dist.pmf(y) > 1e-6]
                Y = np.repeat(ys, 200)
                values, cats, _, _ = sample_conditional_batch(
                    Y, r, D, parent, rng
                )
                rth = np.sort(values, axis=1)[:, r - 1]
                np.testing.assert_array_equal(rth, Y)
                assert np.all(cats >= 0)

    def test_joint_sorted_tuple_matches_oracle(self, rng):
        parent = PoissonParent(2.0)
        spec = OrderSpec(2, 3)
        Y, n = 2, 100000
        cond = brute_force_conditional(Y, spec, parent, _oracle_zmax(parent, Y))
        oracle = {}
        for t, p in cond.items():
            key = tuple(sorted(t))
            oracle[key] = oracle.get(key, 0.0) + p
        values, _, _, _ = sample_conditional_batch(
            np.full(n, Y), spec.r, spec.D, parent, rng
        )
        emp = {}
        for row in np.sort(values, axis=1):
            key = tuple(int(v) for v in row)
            emp[key] = emp.get(key, 0.0) + 1.0 / n
        keys = set(oracle) | set(emp)
        tv = 0.5 * sum(abs(oracle.get(k, 0.0) - emp.get(k, 0.0)) for k in keys)
        assert tv < 0.01

    def test_coordinates_exchangeable(self, rng):
        # each coordinate's marginal law must be identical
        parent = PoissonParent(2.0)
        n = 60000
        values, _, _, _ = sample_conditional_batch(
            np.full(n, 2), 2, 3, parent, rng
        )
        hists = [np.bincount(values[:, j], minlength=16)[:16] / n for j in range(3)]
        for j in (1, 2):
            tv = 0.5 * np.abs(hists[0] - hists[j]).sum()
            assert tv < 0.015

    def test_first_coordinate_bayes_cross_check(self, rng):
        # P(Z1 = z | OS = Y) via Bayes on the 3-case partition of z vs Y:
        # f(z) * P(OS' = Y | one coord pinned at z) / os_pmf(Y), where the
        # pinned coordinate shifts the residual order statistic
        parent = NegBinParent(2.0, 0.5)
        r, D, Y = 2, 4, 2
        spec = OrderSpec(r, D)
        dist = OrderStatDistribution(parent, spec)
        denom = dist.pmf(Y)
        zmax = 50

        def pinned(stats):
            return prob_os_equals_y(stats, Y, spec, parent)

        want = np.zeros(zmax + 1)
        for z in range(zmax + 1):
            if z < Y:
                stats = SufficientStats(1, 0, 0)
            elif z == Y:
                stats = SufficientStats(0, 1, 0)
            else:
                stats = SufficientStats(0, 0, 1)
            want[z] = float(parent.pmf(z)) * pinned(stats) / denom
        assert want.sum() == pytest.approx(1.0, abs=1e-7)

        n = 100000
        values, _, _, _ = sample_conditional_batch(np.full(n, Y), r, D, parent, rng)
        emp = np.bincount(values[:, 0], minlength=zmax + 1)[: zmax + 1] / n
        assert 0.5 * np.abs(want - emp).sum() < 0.012

    def test_breaks_and_no_breaks_agree(self, rng):
        parent = PoissonParent(2.0)
        r, D, Y, n = 2, 4, 1, 50000
        on, _, bs_on, _ = sample_conditional_batch(
            np.full(n, Y), r, D, parent, rng, use_breaks=True
        )
        off, _, bs_off, steps_off = sample_conditional_batch(
            np.full(n, Y), r, D, parent, rng, use_breaks=False
        )
        # break detection is recorded either way; without breaks every
        # coordinate still goes through a categorical step
        assert np.all(steps_off == D)
        assert (bs_on >= 0).mean() > 0.5  # breaks actually fire here
        key_on = np.sort(on, axis=1)
        key_off = np.sort(off, axis=1)
        # compare first-coordinate-of-sorted histograms (cheap TV proxy)
        for col in range(D):
            a = np.bincount(key_on[:, col], minlength=20)[:20] / n
            b = np.bincount(key_off[:, col], minlength=20)[:20] / n
            assert 0.5 * np.abs(a - b).sum() < 0.015

    def test_heterogeneous_batch(self, rng):
        # per-point (r, D) and per-point parent parameters in one batch
        mu = np.array([0.5, 2.0, 5.0, 2.0])
        parent = PoissonParent(mu)
        Y = np.array([0, 2, 4, 1])
        r = np.array([1, 2, 3, 1])
        D = np.array([2, 3, 4, 1])
        values, cats, _, _ = sample_conditional_batch(Y, r, D, parent, rng)
        assert values.shape == (4, 4)
        for i in range(4):
            row = np.sort(values[i, : D[i]])
            assert row[r[i] - 1] == Y[i]
            assert np.all(cats[i, D[i]:] == -1)

    def test_zero_probability_event_rejected(self, rng):
        # max of three Pois(0.1) draws equal to 300: the pmf underflows to
        # an exact zero, so the conditioning event must be rejected
        with pytest.raises(ValueError):
            sample_conditional_batch(
                np.array([300]), 3, 3, PoissonParent(0.1), rng
            )


class TestBruteForce:
    def test_single_draw_oracle(self):
        cond = brute_force_conditional(3, OrderSpec(1, 1), PoissonParent(2.0), 20)
        assert cond == {(3,): pytest.approx(1.0)}

    def test_probabilities_normalized(self):
        cond = brute_force_conditional(2, OrderSpec(2, 3), PoissonParent(2.0), 18)
        assert sum(cond.values()) == pytest.approx(1.0, abs=1e-10)
        assert all(sorted(t)[1] == 2 for t in cond)

    def test_rejects_unsound_tail(self):
        with pytest.raises(ValueError):
            brute_force_arrays(2, OrderSpec(2, 3), PoissonParent(5.0), 8)

    def test_rejects_oversized_enumeration(self):
        with pytest.raises(ValueError):
            brute_force_arrays(2, OrderSpec(2, 7), PoissonParent(0.5), 10)
