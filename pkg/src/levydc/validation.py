"""Statistical validation battery behind the ``validate`` subcommand.

Each check returns a :class:`CheckResult`; statistical checks use fixed
substreams of the configured seed so a given configuration always produces
the same verdicts.  ``inject_fault = "inverse-cdf"`` deliberately corrupts
the size sampler so the KS check's failure path can be exercised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dynamic_cutting import (
    CutParams,
    conditional_size_cdf,
    conditional_size_inverse,
    empirical_laplace_check,
    intensity_lambda,
    inverse_jump_size_cdf,
    jump_size_cdf,
    sample_jump_times,
)
from .engine import prepare_noise
from .fixed_cutting import ArParams, ar_intensity, ar_sample_jumps, ar_size_cdf
from .measures import NEG, POS, TruncatedStableModel, check_tail_pruitt_equivalence
from .rng import TrajectorySeeds


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _ks_critical(n: int, level: float = 0.01) -> float:
    return math.sqrt(-0.5 * math.log(level / 2.0)) / math.sqrt(n)


def check_intensity(model, params, runs: int, rng) -> CheckResult:
    counts = np.array(
        [sample_jump_times(params, POS, rng).size for _ in range(runs)], dtype=float
    )
    expected = intensity_lambda(params, POS, params.horizon_T)
    se = counts.std(ddof=1) / math.sqrt(runs)
    dev = abs(counts.mean() - expected)
    return CheckResult(
        "jump-count-mean",
        dev <= 3.0 * se,
        f"mean {counts.mean():.4f} vs {expected:.4f} over {runs} runs "
        f"(|dev| {dev:.4f}, 3*SE {3 * se:.4f})",
    )


def check_size_law_piecewise(model, params, t: float, n: int, rng) -> CheckResult:
    u = rng.random(n)
    samples = inverse_jump_size_cdf(params, model, POS, t, u)
    stat = stats.kstest(
        samples, lambda x: jump_size_cdf(params, model, POS, t, x)
    ).statistic
    crit = _ks_critical(n)
    grid = np.arange(1, 100) / 100.0
    back = jump_size_cdf(
        params, model, POS, t, inverse_jump_size_cdf(params, model, POS, t, grid)
    )
    round_trip = float(np.max(np.abs(back - grid)))
    ok = stat < crit and round_trip <= 1e-10
    return CheckResult(
        "size-law-piecewise",
        ok,
        f"KS {stat:.5f} vs 1% critical {crit:.5f}; round trip {round_trip:.2e}",
    )


def check_size_law_conditional(
    model, params, t: float, n: int, rng, inject_fault: str = "none"
) -> CheckResult:
    u = rng.random(n)
    if inject_fault == "inverse-cdf":
        u = u**2
    samples = conditional_size_inverse(params, model, POS, t, u)
    stat = stats.kstest(
        samples, lambda x: conditional_size_cdf(params, model, POS, t, x)
    ).statistic
    crit = _ks_critical(n)
    threshold = params.threshold(model, POS, t)
    respects = bool(np.all(samples >= threshold))
    ok = stat < crit and respects
    return CheckResult(
        "size-law-at-arrival",
        ok,
        f"KS {stat:.5f} vs 1% critical {crit:.5f}; all >= threshold: {respects}",
    )


def check_laplace(model, params, t, r_values, n_samples, rng) -> CheckResult:
    checks = empirical_laplace_check(params, model, t, r_values, n_samples, rng)
    worst = max(c.rel_error for c in checks)
    ok = all(c.usable and c.rel_error < 0.05 for c in checks)
    detail = "; ".join(
        f"r={c.r:g}: rel {c.rel_error:.4f}" + ("" if c.usable else " (unusable)")
        for c in checks
    )
    return CheckResult("laplace-transform", ok, f"{detail} (worst {worst:.4f})")


def check_tail_inverse(model, rng) -> CheckResult:
    ts = 10.0 ** rng.uniform(-3, 3, size=200)
    worst = 0.0
    for t in ts:
        r = model.tau(POS, t)
        if r <= 0.0 or r >= model.support_radius:
            continue
        worst = max(worst, abs(model.tail(POS, r) - 1.0 / t) * t)
    return CheckResult(
        "tail-inverse-consistency",
        worst <= 1e-10,
        f"max relative |tail(tau(t)) - 1/t| = {worst:.2e}",
    )


def check_pruitt(model) -> CheckResult:
    report = check_tail_pruitt_equivalence(model, np.arange(1, 10) / 10.0)
    return CheckResult(
        "tail-pruitt-equivalence",
        report.bounded(),
        f"ratio band [{report.min_ratio:.4f}, {report.max_ratio:.4f}]",
    )


def check_tau_scaling(model, rng) -> CheckResult:
    alpha = model.alpha
    ts = 10.0 ** rng.uniform(-6, 0, size=100)
    rs = 10.0 ** rng.uniform(1e-6, 2, size=100)  # R in (1, 100]
    worst = -np.inf
    for t, big_r in zip(ts, rs):
        lhs = model.tau(POS, big_r * t)
        rhs = big_r ** (1.0 / alpha) * model.tau(POS, t)
        worst = max(worst, lhs - rhs * (1.0 + 1e-12))
    return CheckResult(
        "tau-scaling",
        worst <= 0.0,
        f"max tau(R*t) - R^(1/alpha)*tau(t) = {worst:.2e}",
    )


def check_ar_sampler(model, ar_params, runs: int, ks_n: int, rng) -> CheckResult:
    rate = ar_intensity(ar_params, model, POS) + ar_intensity(ar_params, model, NEG)
    counts = np.array(
        [len(ar_sample_jumps(ar_params, model, rng)) for _ in range(runs)], dtype=float
    )
    expected = rate * ar_params.horizon_T
    se = counts.std(ddof=1) / math.sqrt(runs)
    count_ok = abs(counts.mean() - expected) <= 3.0 * se
    mags: list = []
    while sum(m.size for m in mags) < ks_n:
        stream = ar_sample_jumps(ar_params, model, rng)
        mags.append(stream.sizes[stream.sides > 0])
    mags = np.concatenate(mags)[:ks_n]
    stat = stats.kstest(mags, lambda x: ar_size_cdf(ar_params, model, POS, x)).statistic
    crit = _ks_critical(mags.size)
    ok = count_ok and stat < crit
    return CheckResult(
        "fixed-cut-sampler",
        ok,
        f"mean count {counts.mean():.2f} vs {expected:.2f} (3*SE {3 * se:.2f}); "
        f"size KS {stat:.5f} vs {crit:.5f} on {mags.size} draws",
    )


def check_brownian_aggregation(model, params, seed: int) -> CheckResult:
    noise = prepare_noise(TrajectorySeeds(seed, 0, 0), 6, "dc", params, model, 1.0)
    fine = noise.brownian_increments(noise.union_times)
    atoms_ok = np.array_equal(fine, noise.union_increments)
    coarse_times = noise.coarse_regular_times(2**3)
    grid_times = np.union1d(coarse_times, noise.jumps.times)
    coarse = noise.brownian_increments(grid_times)
    idx = np.searchsorted(noise.union_times, grid_times)
    ref = np.add.reduceat(noise.union_increments, idx[:-1])
    agg_ok = np.array_equal(coarse, ref)
    return CheckResult(
        "brownian-aggregation",
        bool(atoms_ok and agg_ok),
        f"atoms exact: {atoms_ok}; coarse segmented sums exact: {agg_ok}",
    )


def run_validation(cfg) -> list:
    """Execute the battery for the configured model; deterministic given
    the seed."""
    alpha = cfg.get_float("levy.alpha")
    if not 0.0 < alpha < 2.0:
        from .config import ConfigError

        raise ConfigError(f"levy.alpha must lie in (0, 2), got {alpha}")
    model = TruncatedStableModel(alpha)
    T = cfg.get_float("cut.T")
    h = cfg.get_float("cut.h", required=False)
    params = CutParams(cfg.get_float("cut.epsilon"), h if h else 1e-3, T)
    ar_params = ArParams(cfg.get_float("ar.threshold_eps"), T)
    seed = cfg.get_int("seed")
    runs = cfg.get_int("validate.runs")
    ks_n = cfg.get_int("validate.ks_samples")
    lap_n = cfg.get_int("validate.laplace_samples")
    r_values = cfg.get_float_list("validate.laplace_r")
    t_fixed = cfg.get_float("validate.fixed_time")
    fault = cfg.get_str("validate.inject_fault", choices=("none", "inverse-cdf"))

    seeds = TrajectorySeeds(seed, 0, 0)
    results = [
        check_intensity(model, params, runs, seeds.generator(100)),
        check_size_law_piecewise(model, params, t_fixed, ks_n, seeds.generator(101)),
        check_size_law_conditional(
            model, params, t_fixed, ks_n, seeds.generator(102), inject_fault=fault
        ),
        check_laplace(model, params, T, r_values, lap_n, seeds.generator(103)),
        check_tail_inverse(model, seeds.generator(104)),
        check_pruitt(model),
        check_tau_scaling(model, seeds.generator(105)),
        check_ar_sampler(model, ar_params, min(runs, 300), ks_n, seeds.generator(106)),
        check_brownian_aggregation(model, params, seed),
    ]
    return results
