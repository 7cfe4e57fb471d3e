import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from sampled_card.analysis import expected_p1
from sampled_card.goodturing import (
    EmptySample,
    SampleSummary,
    gt_frequency,
    p0_empirical_variance,
    p0_hat,
    p0_variance_from_counts,
    summary_offer,
)


def summary_of(seq, capped=True):
    s = SampleSummary(capped=capped)
    for x in seq:
        summary_offer(s, x)
    return s


class TestTallies:
    def test_single(self):
        s = summary_of([1])
        assert (s.l, s.e1, s.e2) == (1, 1, 0)

    def test_pair(self):
        s = summary_of([1, 1])
        assert (s.l, s.e1, s.e2) == (2, 0, 1)

    def test_cap_keeps_counts_bounded(self):
        s = summary_of([5] * 10)
        assert s.counts[5] == 3 and s.e1 == s.e2 == 0
        assert summary_of([5] * 10, capped=False).counts[5] == 10

    def test_random_offers_match_histogram(self):
        seq = np.random.default_rng(4).integers(0, 3000, size=10**4).tolist()
        s = summary_of(seq)
        l, e1, e2, _ = oracles.brute_tallies(seq)
        assert (s.l, s.e1, s.e2) == (l, e1, e2)

    def test_thousand_random_multisets(self):
        assert oracles.goodturing_mismatches(1000, seed=17) == 0

    @given(st.lists(st.integers(0, 30), max_size=200))
    def test_batch_equals_sequential(self, seq):
        a = summary_of(seq)
        b = SampleSummary()
        b.offer_many(np.array(seq, dtype=np.uint64))
        assert (a.l, a.e1, a.e2, a.counts) == (b.l, b.e1, b.e2, b.counts)


class TestUnseenMass:
    def test_tenth_singletons(self):
        s = SampleSummary()
        s.l, s.e1 = 1000, 100
        assert p0_hat(s) == pytest.approx(0.1)

    def test_all_distinct(self):
        assert p0_hat(summary_of(range(20))) == 1.0

    def test_no_singletons(self):
        assert p0_hat(summary_of([1, 1, 2, 2])) == 0.0

    def test_empty_raises(self):
        with pytest.raises(EmptySample):
            p0_hat(SampleSummary())
        with pytest.raises(EmptySample):
            p0_empirical_variance(SampleSummary())


class TestFrequencyEstimates:
    @given(st.lists(st.integers(0, 20), min_size=1, max_size=100))
    def test_i0_is_p0_hat(self, seq):
        s = summary_of(seq)
        assert gt_frequency(s, 0) == p0_hat(s)

    def test_i1_formula(self):
        s = SampleSummary()
        s.l, s.e2 = 100, 5
        assert gt_frequency(s, 1) == pytest.approx(0.1)

    def test_higher_orders_need_uncapped(self):
        seq = [1, 1, 1, 2, 2, 2, 3]
        with pytest.raises(ValueError):
            gt_frequency(summary_of(seq), 2)
        assert gt_frequency(summary_of(seq, capped=False), 2) == pytest.approx(3 * 2 / 7)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            gt_frequency(summary_of([1]), -1)

    def test_p1_hat_tracks_expectation(self):
        # equal frequencies: the once-seen share of occurrences and of elements coincide
        f = np.full(10_000, 100)
        P = 0.01
        rng = np.random.default_rng(8)
        vals = []
        for _ in range(200):
            k = rng.binomial(f, P)
            vals.append(2 * np.sum(k == 2) / k.sum())
        vals = np.array(vals)
        sigma = vals.std(ddof=1) / np.sqrt(vals.size)
        assert abs(vals.mean() - expected_p1(f, P, exact=True)) <= 4 * sigma


class TestVariance:
    def test_zero(self):
        assert p0_variance_from_counts(0, 0, 10) == 0.0

    def test_formula(self):
        assert p0_variance_from_counts(100, 50, 1000) == pytest.approx(1.9e-4)

    def test_summary_path(self):
        s = summary_of([1, 2, 2, 3, 3, 4])
        e1, e2, l = 2, 2, 6
        assert p0_empirical_variance(s) == pytest.approx(((e1 + 2 * e2) / l - (e1 / l) ** 2) / l)

    def test_resampling_oracle(self):
        # 10^4 binomial resamples of a fixed population; error of |E1|/l against the
        # realized unseen share has the formula's variance
        rng = np.random.default_rng(10)
        f = rng.integers(5, 200, size=3000)
        P = 0.02
        errs, formula = [], []
        for _ in range(100):
            k = rng.binomial(f, P, size=(100, f.size))
            l = k.sum(axis=1)
            e1 = (k == 1).sum(axis=1)
            e2 = (k == 2).sum(axis=1)
            m0 = (f * (k == 0)).sum(axis=1) / f.sum()
            errs.append(e1 / l - m0)
            formula.extend(p0_variance_from_counts(a, b, c) for a, b, c in zip(e1, e2, l))
        ratio = np.concatenate(errs).var(ddof=1) / np.mean(formula)
        assert 0.5 <= ratio <= 2.0
