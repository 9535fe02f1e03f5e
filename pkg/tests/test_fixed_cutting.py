import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from levydc.fixed_cutting import (
    ArParams,
    ar_intensity,
    ar_sample_jumps,
    ar_size_cdf,
    ar_size_inverse,
    ar_small_jump_variance,
)
from levydc.measures import NEG, POS, TruncatedStableModel


class TestIntensity:
    def test_alpha1(self, stable1, ar_params):
        assert ar_intensity(ar_params, stable1, POS) == pytest.approx(99.0, rel=1e-12)
        oracle, _ = quad(lambda z: z**-2.0, 0.01, 1.0, epsabs=1e-12)
        assert ar_intensity(ar_params, stable1, POS) == pytest.approx(oracle, rel=1e-9)

    def test_threshold_beyond_support(self, stable1):
        assert ar_intensity(ArParams(1.0, 1.0), stable1, POS) == 0.0

    def test_alpha15(self, stable15, ar_params):
        expected = (0.01**-1.5 - 1.0) / 1.5
        assert ar_intensity(ar_params, stable15, POS) == pytest.approx(
            expected, rel=1e-12
        )

    def test_zero_threshold_rejected(self):
        with pytest.raises(ValueError):
            ArParams(0.0, 1.0)


class TestSampler:
    def test_mean_count_within_three_se(self, stable1, ar_params):
        rng = np.random.default_rng(41)
        runs = 600
        counts = np.array(
            [len(ar_sample_jumps(ar_params, stable1, rng)) for _ in range(runs)],
            dtype=float,
        )
        expected = 2.0 * 99.0 * ar_params.horizon_T
        se = counts.std(ddof=1) / math.sqrt(runs)
        assert abs(counts.mean() - expected) <= 3.0 * se

    def test_mean_interarrival(self, stable1, ar_params):
        # exchangeable inter-arrivals with mean 1/rate
        rng = np.random.default_rng(42)
        gaps = []
        for _ in range(300):
            stream = ar_sample_jumps(ar_params, stable1, rng)
            pos_times = stream.times[stream.sides > 0]
            gaps.extend(np.diff(pos_times))
        gaps = np.asarray(gaps)
        se = gaps.std(ddof=1) / math.sqrt(gaps.size)
        assert abs(gaps.mean() - 1.0 / 99.0) <= 3.0 * se

    def test_empty_when_threshold_at_support(self, stable1):
        rng = np.random.default_rng(43)
        stream = ar_sample_jumps(ArParams(1.0, 1.0), stable1, rng)
        assert len(stream) == 0

    def test_all_sizes_beyond_threshold(self, stable1, ar_params):
        rng = np.random.default_rng(44)
        stream = ar_sample_jumps(ar_params, stable1, rng)
        assert np.all(np.abs(stream.sizes) > ar_params.threshold_eps * (1 - 1e-12))

    def test_size_ks_against_restricted_cdf(self, stable15, ar_params):
        rng = np.random.default_rng(45)
        mags = []
        while sum(m.size for m in mags) < 10_000:
            stream = ar_sample_jumps(ar_params, stable15, rng)
            mags.append(stream.sizes[stream.sides > 0])
        mags = np.concatenate(mags)[:10_000]
        stat = stats.kstest(
            mags, lambda x: ar_size_cdf(ar_params, stable15, POS, x)
        ).statistic
        assert stat < 1.6276 / math.sqrt(10_000)

    def test_inverse_round_trip(self, stable1, ar_params):
        us = np.linspace(0.01, 0.99, 40)
        xs = ar_size_inverse(ar_params, stable1, POS, us)
        back = ar_size_cdf(ar_params, stable1, POS, xs)
        assert np.max(np.abs(back - us)) <= 1e-10


class TestSmallJumpVariance:
    def test_alpha1_closed_form(self, stable1, ar_params):
        assert ar_small_jump_variance(ar_params, stable1) == pytest.approx(
            0.02, rel=1e-12
        )
        oracle, _ = quad(lambda z: 2.0 * z**2 * z**-2.0, 0.0, 0.01, epsabs=1e-14)
        assert ar_small_jump_variance(ar_params, stable1) == pytest.approx(
            oracle, rel=1e-9
        )

    def test_saturates_at_total_second_moment(self, stable15):
        assert ar_small_jump_variance(ArParams(2.0, 1.0), stable15) == pytest.approx(
            2.0 / 0.5, rel=1e-12
        )

    def test_vanishes_with_threshold(self, stable1):
        assert ar_small_jump_variance(ArParams(1e-9, 1.0), stable1) < 1e-8
