import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from levydc.dynamic_cutting import (
    CutParams,
    JumpStream,
    compensated_drift,
    conditional_size_cdf,
    conditional_size_inverse,
    empirical_laplace_check,
    intensity_lambda,
    inverse_jump_size_cdf,
    inverse_lambda,
    jump_size_cdf,
    laplace_exponent,
    sample_jump_sizes,
    sample_jump_stream,
    sample_jump_times,
    sample_union_stream,
    small_jump_variance_rate,
    union_intensity,
    union_inverse_intensity,
)
from levydc.measures import NEG, POS, TruncatedStableModel, make_one_sided_stable


class TestIntensity:
    def test_closed_form_vs_quadrature(self, cut_params):
        expected = 10**0.3 / 0.9
        assert intensity_lambda(cut_params, POS, 1.0) == pytest.approx(
            expected, rel=1e-12
        )
        oracle, _ = quad(
            lambda s: (1.0 / (cut_params.h * s)) ** cut_params.epsilon,
            0.0,
            1.0,
            epsabs=1e-12,
        )
        assert intensity_lambda(cut_params, POS, 1.0) == pytest.approx(
            oracle, rel=1e-9
        )

    def test_n_power_choice_gives_n_over_one_minus_eps(self):
        n, eps = 64, 0.25
        params = CutParams(eps, float(n) ** (-1.0 / eps), 1.0)
        assert intensity_lambda(params, POS, 1.0) == pytest.approx(
            n / (1.0 - eps), rel=1e-12
        )

    def test_zero_time(self, cut_params):
        assert intensity_lambda(cut_params, POS, 0.0) == 0.0

    def test_negative_time_rejected(self, cut_params):
        with pytest.raises(ValueError):
            intensity_lambda(cut_params, POS, -1.0)

    def test_inverse_round_trip(self, cut_params):
        t = 0.37
        u = intensity_lambda(cut_params, POS, t)
        assert inverse_lambda(cut_params, u) == pytest.approx(t, rel=1e-12)
        assert inverse_lambda(cut_params, 0.0) == 0.0
        assert inverse_lambda(cut_params, 2.2169581277) == pytest.approx(1.0, rel=1e-9)

    def test_strictly_increasing(self, cut_params):
        ts = np.linspace(0.01, 1.0, 50)
        vals = [intensity_lambda(cut_params, POS, t) for t in ts]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class _HugeExponentials:
    """Stub stream whose exponentials immediately exhaust any budget."""

    def standard_exponential(self, size):
        return np.full(size, 1e12)


class TestJumpTimes:
    def test_mean_count_within_three_se(self, stable1, cut_params):
        rng = np.random.default_rng(123)
        runs = 1000
        counts = np.array(
            [sample_jump_times(cut_params, POS, rng).size for _ in range(runs)],
            dtype=float,
        )
        expected = intensity_lambda(cut_params, POS, 1.0)
        se = counts.std(ddof=1) / math.sqrt(runs)
        assert abs(counts.mean() - expected) <= 3.0 * se

    def test_forced_empty(self, cut_params):
        times = sample_jump_times(cut_params, POS, _HugeExponentials())
        assert times.size == 0

    def test_strictly_increasing_output(self, cut_params):
        rng = np.random.default_rng(7)
        for _ in range(50):
            times = sample_jump_times(cut_params, POS, rng)
            assert np.all(np.diff(times) > 0.0)
            assert np.all((times > 0.0) & (times < cut_params.horizon_T))

    def test_chunking_matches_one_at_a_time(self, cut_params):
        # the consumed exponential prefix must be identical to a sequential
        # Algorithm-style loop on the same stream
        times = sample_jump_times(cut_params, POS, np.random.default_rng(99))
        rng = np.random.default_rng(99)
        budget = intensity_lambda(cut_params, POS, cut_params.horizon_T)
        total, manual = 0.0, []
        while True:
            total += float(rng.standard_exponential())
            if total >= budget:
                break
            manual.append(inverse_lambda(cut_params, total))
        assert np.allclose(times, manual, rtol=0, atol=0)


class TestSizeLawPiecewise:
    def test_branch_boundary_value_is_eps(self, stable1, cut_params):
        x_star = stable1.tau(POS, (1.0 * cut_params.h) ** cut_params.epsilon)
        val = jump_size_cdf(cut_params, stable1, POS, 1.0, x_star)
        assert val == pytest.approx(cut_params.epsilon, rel=1e-10)

    def test_beyond_support(self, stable1, cut_params):
        assert jump_size_cdf(cut_params, stable1, POS, 1.0, 1.5) == 1.0

    def test_second_branch_frozen_value(self, stable1, cut_params):
        x = 0.9
        expected = 1.0 - 0.9 * 10**-0.3 * stable1.tail(POS, x)
        assert jump_size_cdf(cut_params, stable1, POS, 1.0, x) == pytest.approx(
            expected, rel=1e-12
        )

    def test_mixture_quadrature_oracle(self, stable1, cut_params):
        # independent oracle: normalize the time-mixed measure
        # min(N(u)^(-1/eps)/h, t) nu(du) by the total intensity
        t, eps, h = 1.0, cut_params.epsilon, cut_params.h

        def weight(u):
            return min(
                stable1.tail(POS, u) ** (-1.0 / eps) / h, t
            ) * u ** (-2.0)

        lam = intensity_lambda(cut_params, POS, t)
        for x in (0.2, 0.5, 0.9):
            oracle, _ = quad(weight, 1e-9, x, epsabs=1e-12, epsrel=1e-10, limit=400)
            assert jump_size_cdf(cut_params, stable1, POS, t, x) == pytest.approx(
                oracle / lam, rel=1e-6
            )

    def test_monotone_with_limits(self, stable1, cut_params):
        xs = np.linspace(1e-4, 1.2, 300)
        vals = jump_size_cdf(cut_params, stable1, POS, 0.7, xs)
        assert np.all(np.diff(vals) >= -1e-14)
        assert vals[0] < 1e-3 and vals[-1] == 1.0

    def test_depends_on_time_only_through_product(self, stable1):
        p1 = CutParams(0.1, 1e-3, 10.0)
        p2 = CutParams(0.1, 2e-3, 10.0)
        xs = np.linspace(0.05, 0.95, 11)
        a = jump_size_cdf(p1, stable1, POS, 2.0, xs)  # t*h = 2e-3
        b = jump_size_cdf(p2, stable1, POS, 1.0, xs)  # t*h = 2e-3
        assert np.allclose(a, b, rtol=1e-14)

    def test_round_trip(self, stable1, cut_params):
        us = np.arange(1, 100) / 100.0
        assert cut_params.epsilon in us
        xs = inverse_jump_size_cdf(cut_params, stable1, POS, 1.0, us)
        back = jump_size_cdf(cut_params, stable1, POS, 1.0, xs)
        assert np.max(np.abs(back - us)) <= 1e-10

    def test_inverse_at_eps_is_threshold(self, stable1, cut_params):
        th_eps = (1.0 * cut_params.h) ** cut_params.epsilon
        expected = stable1.tau(POS, th_eps)
        val = inverse_jump_size_cdf(cut_params, stable1, POS, 1.0, cut_params.epsilon)
        assert val == pytest.approx(expected, rel=1e-12)
        # continuity: both branch formulas collapse to the threshold
        lo = inverse_jump_size_cdf(
            cut_params, stable1, POS, 1.0, cut_params.epsilon - 1e-12
        )
        hi = inverse_jump_size_cdf(
            cut_params, stable1, POS, 1.0, cut_params.epsilon + 1e-12
        )
        assert lo == pytest.approx(hi, rel=1e-9)

    def test_upper_tail_reaches_support_edge(self, stable1, cut_params):
        val = inverse_jump_size_cdf(cut_params, stable1, POS, 1.0, 1.0 - 1e-12)
        assert val == pytest.approx(1.0, rel=1e-6)

    def test_low_branch_maps_below_threshold(self, stable1, cut_params):
        # the mixture law carries mass eps below the time-t threshold: for
        # u < eps the inverse lands strictly below it (this is why the
        # trajectory sampler uses the conditional law instead)
        th = stable1.tau(POS, (1.0 * cut_params.h) ** cut_params.epsilon)
        val = inverse_jump_size_cdf(cut_params, stable1, POS, 1.0, 0.05)
        assert val < th

    def test_domain_errors(self, stable1, cut_params):
        with pytest.raises(ValueError):
            jump_size_cdf(cut_params, stable1, POS, 0.0, 0.5)
        with pytest.raises(ValueError):
            inverse_jump_size_cdf(cut_params, stable1, POS, 1.0, 0.0)
        with pytest.raises(ValueError):
            inverse_jump_size_cdf(cut_params, stable1, POS, 1.0, 1.0)


class TestSizeLawConditional:
    def test_matches_piecewise_inverse_rescaled(self, stable1, cut_params):
        eps = cut_params.epsilon
        us = np.linspace(0.01, 0.98, 30)
        a = conditional_size_inverse(cut_params, stable1, POS, 1.0, us)
        b = inverse_jump_size_cdf(cut_params, stable1, POS, 1.0, eps + (1 - eps) * us)
        assert np.allclose(a, b, rtol=1e-12)

    def test_round_trip(self, stable1, cut_params):
        us = np.linspace(0.01, 0.99, 50)
        xs = conditional_size_inverse(cut_params, stable1, POS, 0.6, us)
        back = conditional_size_cdf(cut_params, stable1, POS, 0.6, xs)
        assert np.max(np.abs(back - us)) <= 1e-10

    def test_ks_at_fixed_arrival_time(self, stable1, cut_params):
        rng = np.random.default_rng(5)
        t = 0.8
        samples = conditional_size_inverse(
            cut_params, stable1, POS, t, rng.random(10_000)
        )
        stat = stats.kstest(
            samples, lambda x: conditional_size_cdf(cut_params, stable1, POS, t, x)
        ).statistic
        assert stat < 1.6276 / math.sqrt(10_000)


class TestSampleSizes:
    def test_threshold_respected_per_event(self, stable1, cut_params):
        rng = np.random.default_rng(11)
        for _ in range(200):
            times = sample_jump_times(cut_params, POS, rng)
            sizes = sample_jump_sizes(cut_params, stable1, POS, times, rng)
            thresholds = cut_params.threshold(stable1, POS, times)
            assert np.all(sizes >= thresholds)

    def test_negative_side_is_negated(self, stable1, cut_params):
        rng = np.random.default_rng(12)
        times = np.array([0.2, 0.5, 0.9])
        sizes = sample_jump_sizes(cut_params, stable1, NEG, times, rng)
        assert np.all(sizes < 0.0)
        thresholds = cut_params.threshold(stable1, NEG, times)
        assert np.all(sizes <= -thresholds)

    def test_empty_times(self, stable1, cut_params):
        rng = np.random.default_rng(13)
        assert sample_jump_sizes(cut_params, stable1, POS, np.empty(0), rng).size == 0

    def test_stream_sorted_and_signed(self, stable1, cut_params):
        rng = np.random.default_rng(14)
        stream = sample_jump_stream(cut_params, stable1, rng)
        assert np.all(np.diff(stream.times) >= 0.0)
        assert np.all(np.sign(stream.sizes) == stream.sides)


class TestCompensatedDrift:
    def test_symmetric_is_exactly_zero(self, stable1, cut_params):
        assert compensated_drift(cut_params, stable1, 0.7) == 0.0

    def test_zero_horizon(self, cut_params, stable1):
        assert compensated_drift(cut_params, stable1, 0.0) == 0.0

    def test_one_sided_matches_nested_quadrature(self, cut_params):
        model = make_one_sided_stable(1.0)
        t = 0.25

        def inner(s):
            lo = model.tau(POS, (s * cut_params.h) ** cut_params.epsilon)
            val, _ = quad(lambda z: z * z**-2.0, lo, 1.0, epsabs=1e-13)
            return val

        oracle, _ = quad(inner, 0.0, t, epsabs=1e-11)
        got = compensated_drift(cut_params, model, t)
        assert got > 0.0
        assert got == pytest.approx(oracle, rel=1e-6)


class TestSmallJumpVariance:
    def test_closed_form(self, stable15, cut_params):
        s = 0.5
        r = stable15.tau(POS, (s * cut_params.h) ** cut_params.epsilon)
        expected = 2.0 * r**0.5 / 0.5
        assert small_jump_variance_rate(cut_params, stable15, s) == pytest.approx(
            expected, rel=1e-12
        )
        oracle, _ = quad(lambda z: 2.0 * z**2 * z**-2.5, 0.0, r, epsabs=1e-14)
        assert small_jump_variance_rate(cut_params, stable15, s) == pytest.approx(
            oracle, rel=1e-8
        )

    def test_full_truncation_gives_total_second_moment(self, stable1):
        # threshold at the support edge: all jumps removed
        params = CutParams(0.9, 1e9, 1.0)
        assert small_jump_variance_rate(params, stable1, 1.0) == pytest.approx(
            2.0 / (2.0 - 1.0), rel=1e-6
        )

    def test_monotone_in_time(self, stable1, cut_params):
        ss = np.linspace(0.01, 1.0, 30)
        vals = [small_jump_variance_rate(cut_params, stable1, s) for s in ss]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


class TestLaplace:
    def test_relative_errors_under_five_percent(self, stable1, cut_params):
        rng = np.random.default_rng(21)
        checks = empirical_laplace_check(
            cut_params, stable1, 1.0, [0.5, 1.0, 2.0], 100_000, rng
        )
        for c in checks:
            assert c.usable
            assert c.rel_error < 0.05

    def test_zero_r_trivial(self, stable1, cut_params):
        rng = np.random.default_rng(22)
        checks = empirical_laplace_check(cut_params, stable1, 1.0, [0.0], 100, rng)
        assert checks[0].expected == 0.0
        assert checks[0].empirical == pytest.approx(0.0, abs=1e-12)

    def test_exponent_quadrature_sane(self, stable1, cut_params):
        # exponent is increasing in r and zero at r=0
        vals = [laplace_exponent(cut_params, stable1, 1.0, r) for r in (0.5, 1.0, 2.0)]
        assert vals[0] > 0.0 and vals[0] < vals[1] < vals[2]


class TestUnionField:
    def test_union_intensity_piecewise(self, cut_params, stable1):
        floor = float(stable1.tail(POS, 0.01))
        s_star = floor ** (-1.0 / cut_params.epsilon) / cut_params.h
        for t in (0.1, 0.5, 1.0):
            oracle, _ = quad(
                lambda s: max((s * cut_params.h) ** -cut_params.epsilon, floor),
                0.0,
                t,
                points=[min(s_star, t)],
                epsabs=1e-10,
            )
            assert union_intensity(cut_params, floor, t) == pytest.approx(
                oracle, rel=1e-9
            )
            u = union_intensity(cut_params, floor, t)
            assert union_inverse_intensity(cut_params, floor, u) == pytest.approx(
                t, rel=1e-10
            )

    def test_subset_counts_match_method_laws(self, stable1, cut_params):
        rng = np.random.default_rng(33)
        runs = 400
        dc_counts, ar_counts = [], []
        eps_ar = 0.05
        ar_rate = 2.0 * float(stable1.tail(POS, eps_ar))
        for _ in range(runs):
            stream = sample_union_stream(cut_params, eps_ar, stable1, rng)
            thr = cut_params.threshold(stable1, POS, stream.times)
            dc_counts.append(int(np.sum(np.abs(stream.sizes) >= thr)))
            ar_counts.append(int(np.sum(np.abs(stream.sizes) >= eps_ar)))
        dc_counts = np.asarray(dc_counts, dtype=float)
        ar_counts = np.asarray(ar_counts, dtype=float)
        lam_dc = 2.0 * intensity_lambda(cut_params, POS, 1.0)
        se = dc_counts.std(ddof=1) / math.sqrt(runs)
        assert abs(dc_counts.mean() - lam_dc) <= 3.0 * se
        se = ar_counts.std(ddof=1) / math.sqrt(runs)
        assert abs(ar_counts.mean() - ar_rate) <= 3.0 * se


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            CutParams(0.0, 1e-3, 1.0)
        with pytest.raises(ValueError):
            CutParams(1.0, 1e-3, 1.0)
        with pytest.raises(ValueError):
            CutParams(0.5, 0.0, 1.0)
        with pytest.raises(ValueError):
            CutParams(0.5, 1e-3, 0.0)

    def test_threshold_nondecreasing(self, stable1, cut_params):
        ss = np.linspace(1e-4, 1.0, 50)
        thr = cut_params.threshold(stable1, POS, ss)
        assert np.all(np.diff(thr) >= 0.0)

    def test_jump_stream_validation(self):
        with pytest.raises(ValueError):
            JumpStream(
                np.array([0.5, 0.2]),
                np.array([0.1, 0.1]),
                np.array([1, 1], dtype=np.int8),
            )
