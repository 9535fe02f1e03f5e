"""Monte Carlo estimation of strong pathwise errors across resolutions.

Each trajectory carries one underlying jump realization (the shared field),
one diffusion Brownian motion, and one substitute-driver Brownian motion.
The reference path is the benchmark method's scheme at the finest grid; the
coarse paths of *both* cutting methods derive from the same atoms, so the
per-trajectory sup distance measures each method's deviation from the best
available proxy of the solution under common random numbers.  The benchmark
method's own coarse paths measure pure discretization error; the other
method's additionally carry its intrinsic small-jump-replacement gap, which
is what separates the two methods in the comparison tables.

L^p estimates use batch means: the estimate is computed per loop and loop
estimates are averaged, with the across-loop standard deviation (scaled by
sqrt(loops)) as the reported standard error.  Loops and trajectories are
independent work units addressed by (master seed, loop, trajectory), so any
execution order or worker count yields identical tables.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .dynamic_cutting import CutParams
from .engine import (
    CouplingError,
    PathRecord,
    first_divergent_step,
    prepare_noise,
    prepare_shared_field,
    simulate_batch,
)
from .fixed_cutting import ArParams, ar_small_jump_variance
from .measures import NEG, POS, LevyModel, TruncatedStableModel
from .rng import TrajectorySeeds
from .sde import CoefficientSet, make_sin_cos_example

VALID_METHODS = ("ar", "dc")


class BracketError(RuntimeError):
    """Root bracketing for the variance-matching solve failed."""


# -- configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one comparison experiment."""

    alphas: tuple = (0.5, 1.0, 1.5)
    scheme: int = 2
    methods: tuple = ("ar", "dc")
    eps_dc: float = 0.1
    eps_ar: float = 0.01
    h_mode: str = "match-ar-variance"  # "match-ar-variance" | "n-power" | "fixed"
    h_fixed: Optional[float] = None
    benchmark_k: int = 14
    coarse_ks: tuple = (9, 10, 11, 12)
    p_values: tuple = (2.0, 4.0, 6.0, 8.0, 10.0)
    loops: int = 20
    trajectories: int = 100
    master_seed: int = 0
    horizon: float = 1.0
    x0: float = 0.0
    sigma_mode: str = "auto"
    compensate: bool = True
    small_jump_coupling: str = "shared-brownian"
    benchmark_method: str = "dc"
    jobs: int = 1

    def validate(self) -> None:
        if self.scheme not in (1, 2):
            raise ValueError("scheme must be 1 or 2")
        for m in self.methods:
            if m not in VALID_METHODS:
                raise ValueError(f"unknown method {m!r}")
        if not all(0.0 < a < 2.0 for a in self.alphas):
            raise ValueError("alphas must lie in (0, 2)")
        if any(k >= self.benchmark_k for k in self.coarse_ks):
            raise ValueError("coarse exponents must be below the benchmark exponent")
        if any(p <= 1.0 for p in self.p_values):
            raise ValueError("p values must exceed 1")
        if self.scheme == 1:
            bad = [
                (a, p)
                for a in self.alphas
                for p in self.p_values
                if p <= max(1.0, a)
            ]
            if bad:
                raise ValueError(
                    f"scheme 1 requires p > max(1, alpha); offending pairs: {bad}"
                )
        if self.h_mode not in ("match-ar-variance", "n-power", "fixed"):
            raise ValueError(f"unknown h_mode {self.h_mode!r}")
        if self.h_mode == "fixed" and (self.h_fixed is None or self.h_fixed <= 0.0):
            raise ValueError("h_mode 'fixed' needs a positive h value")
        if self.loops < 1 or self.trajectories < 1:
            raise ValueError("loops and trajectories must be positive")
        if self.small_jump_coupling not in ("shared-brownian", "independent"):
            raise ValueError(
                f"unknown small_jump_coupling {self.small_jump_coupling!r}"
            )
        if self.benchmark_method not in VALID_METHODS:
            raise ValueError(f"unknown benchmark_method {self.benchmark_method!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")


# -- per-trajectory error ----------------------------------------------------------


def strong_error(benchmark: PathRecord, coarse: PathRecord) -> float:
    """Sup over the union of both grids of the pathwise difference, under
    the previous-point step extension.  Both paths must come from the same
    trajectory's noise."""
    if benchmark.trajectory_key != coarse.trajectory_key:
        raise CouplingError(
            "strong_error compares paths of one trajectory; keys differ: "
            f"{benchmark.trajectory_key} vs {coarse.trajectory_key}"
        )
    union = np.union1d(benchmark.times, coarse.times)
    diff = benchmark.value_at(union) - coarse.value_at(union)
    return float(np.max(np.abs(diff)))


def estimate_lp(samples, p: float) -> tuple:
    """Empirical L^p norm ``(mean of s^p)^(1/p)`` with a delta-method
    standard error."""
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        raise ValueError("samples must be nonempty")
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    powered = s**p
    m = float(np.mean(powered))
    est = m ** (1.0 / p)
    if s.size < 2 or m == 0.0:
        return est, 0.0
    var_m = float(np.var(powered, ddof=1)) / s.size
    se = (1.0 / p) * m ** (1.0 / p - 1.0) * math.sqrt(var_m)
    return est, se


# -- variance matching --------------------------------------------------------------


def h_for_variance_match(
    model: LevyModel,
    coeffs: CoefficientSet,
    eps_dc: float,
    eps_ar: float,
    T: float,
    *,
    panels: int = 1024,
) -> float:
    """Time scale ``h`` equalizing total removed-jump variance over
    ``[0, T]`` between the dynamic and constant cuts.

    The matched equation is measure-level (a multiplicative jump coefficient
    scales both sides identically, so ``coeffs`` does not enter).  The time
    integral uses a fixed trapezoid rule with ``panels`` panels; the solve
    is bisection in ``log10 h`` to relative residual below 1e-6.  The h
    values are extremely sensitive to the integral (the equation amplifies
    relative errors by roughly ``alpha / (eps_dc * (2 - alpha))``), so the
    quadrature rule is part of the contract.
    """
    if not (0.0 < eps_dc < 1.0 and 0.0 < eps_ar < 1.0):
        raise ValueError("eps_dc and eps_ar must lie in (0, 1)")
    target = T * (ar_small_jump_variance(ArParams(eps_ar, T), model))
    s_grid = np.linspace(0.0, T, panels + 1)

    def integrated(log10_h: float) -> float:
        params = CutParams(eps_dc, 10.0**log10_h, T)
        rate = np.zeros(s_grid.size)
        for side in (POS, NEG):
            levels = params.cut_level(s_grid)
            r = np.zeros_like(levels)
            mask = levels > 0.0
            if mask.any():
                r[mask] = model.tau(side, levels[mask])
            rate += model.truncated_abs_moment_side(side, 2.0, r)
        return float(np.trapezoid(rate, s_grid))

    def residual(log10_h: float) -> float:
        return math.log(integrated(log10_h) / target)

    lo, hi = -60.0, -1.0
    f_lo, f_hi = residual(lo), residual(hi)
    tries = 0
    while f_lo > 0.0 and lo > -280.0:
        lo -= 40.0
        f_lo = residual(lo)
        tries += 1
    while f_hi < 0.0 and hi < -1e-6:
        hi = hi / 2.0
        f_hi = residual(hi)
        tries += 1
    if f_lo > 0.0 or f_hi < 0.0:
        raise BracketError(
            f"no sign change in [1e{lo:.0f}, 1e{hi:.3g}] after {tries} expansions; "
            "the two cuts' variances cannot be matched for this model"
        )
    root = brentq(residual, lo, hi, xtol=1e-11, rtol=8.9e-16)
    h = 10.0**root
    if abs(residual(root)) > 1e-6:
        raise BracketError("variance match did not converge to relative 1e-6")
    return h


def resolve_h(config: ExperimentConfig, model: LevyModel, coeffs: CoefficientSet) -> float:
    if config.h_mode == "fixed":
        return float(config.h_fixed)
    if config.h_mode == "n-power":
        # Tied to the benchmark resolution so the jump stream stays shared
        # across coarse resolutions.
        return float(2**config.benchmark_k) ** (-1.0 / config.eps_dc)
    return h_for_variance_match(
        model, coeffs, config.eps_dc, config.eps_ar, config.horizon
    )


# -- comparison runs -----------------------------------------------------------------


@dataclass(frozen=True)
class _LoopTask:
    alpha: float
    methods: tuple
    benchmark_method: str
    h: float
    loop: int
    scheme: int
    eps_dc: float
    eps_ar: float
    benchmark_k: int
    coarse_ks: tuple
    trajectories: int
    master_seed: int
    horizon: float
    x0: float
    sigma_mode: str
    compensate: bool
    small_jump_coupling: str


def _run_loop_task(task: _LoopTask) -> dict:
    """Per-trajectory sup errors for one (alpha, loop) block, keyed by
    (method, k).

    Each trajectory samples one shared jump field; the benchmark runs the
    benchmark method at the finest grid; every coarse path of every method
    is compared against it on the grid union.  Diverged trajectories are
    reported as NaN sups and excluded upstream.
    """
    model = TruncatedStableModel(task.alpha)
    coeffs = make_sin_cos_example(model)
    cut_params = CutParams(task.eps_dc, task.h, task.horizon)
    ar_params = ArParams(task.eps_ar, task.horizon)
    params = {"dc": cut_params, "ar": ar_params}

    methods_needed = tuple(dict.fromkeys((*task.methods, task.benchmark_method)))
    fields = [
        prepare_shared_field(
            TrajectorySeeds(task.master_seed, task.loop, b),
            cut_params,
            ar_params,
            model,
        )
        for b in range(task.trajectories)
    ]
    noises = {
        m: [
            prepare_noise(
                TrajectorySeeds(task.master_seed, task.loop, b),
                task.benchmark_k,
                m,
                params[m],
                model,
                task.horizon,
                shared_field=fields[b],
            )
            for b in range(task.trajectories)
        ]
        for m in methods_needed
    }
    common = dict(
        x0=task.x0,
        sigma_mode=task.sigma_mode,
        compensate=task.compensate,
        small_jump_coupling=task.small_jump_coupling,
    )
    bench = simulate_batch(
        task.scheme,
        task.benchmark_method,
        coeffs,
        model,
        params[task.benchmark_method],
        noises[task.benchmark_method],
        2**task.benchmark_k,
        raise_on_divergence=False,
        **common,
    )
    # Evaluation grid per trajectory: regular benchmark points plus every
    # field jump time covers the union of all compared grids.
    masters = [
        np.union1d(noises[task.benchmark_method][b].regular_times, fields[b].jumps.times)
        for b in range(task.trajectories)
    ]
    bench_bad = [first_divergent_step(b.values) is not None for b in bench]
    bench_vals = [b.value_at(m) for b, m in zip(bench, masters)]

    sups: dict = {}
    for method in task.methods:
        for k in task.coarse_ks:
            coarse = simulate_batch(
                task.scheme,
                method,
                coeffs,
                model,
                params[method],
                noises[method],
                2**k,
                raise_on_divergence=False,
                **common,
            )
            vals = np.empty(task.trajectories)
            for i, c in enumerate(coarse):
                if bench_bad[i] or first_divergent_step(c.values) is not None:
                    vals[i] = np.nan
                else:
                    vals[i] = float(
                        np.max(np.abs(bench_vals[i] - c.value_at(masters[i])))
                    )
            sups[(method, k)] = vals
    return sups


@dataclass
class ErrorCell:
    error: float
    stderr: float
    loops: int
    excluded: int
    total_trajectories: int

    @property
    def valid(self) -> bool:
        return self.excluded <= 0.01 * self.total_trajectories


@dataclass
class ErrorTable:
    """Rows keyed by (alpha, method, scheme, k, p)."""

    rows: dict = field(default_factory=dict)

    def csv_rows(self) -> list:
        header = [
            "alpha",
            "method",
            "scheme",
            "k",
            "p",
            "error",
            "stderr",
            "loops",
            "excluded",
        ]
        out = [header]
        for key in sorted(self.rows, key=lambda k: (k[0], k[1], k[2], k[3], k[4])):
            alpha, method, scheme, k, p = key
            cell = self.rows[key]
            out.append(
                [
                    f"{alpha:g}",
                    method,
                    str(scheme),
                    str(k),
                    f"{p:g}",
                    f"{cell.error:.12g}",
                    f"{cell.stderr:.12g}",
                    str(cell.loops),
                    str(cell.excluded),
                ]
            )
        return out


@dataclass
class ComparisonResult:
    config: ExperimentConfig
    table: ErrorTable
    differences: dict  # (alpha, k, p) -> (first minus second, stderr)
    loop_estimates: dict  # (alpha, method, k, p) -> ndarray of per-loop values
    excluded: dict  # (alpha, method, k) -> count
    h_values: dict  # alpha -> h used by the dynamic cut

    def difference_csv_rows(self) -> list:
        """Canonical difference schema, oriented as AR minus DC."""
        out = [["alpha", "k", "p", "ar_minus_dc", "stderr"]]
        if len(self.config.methods) != 2:
            return out
        sign = 1.0 if self.config.methods == ("ar", "dc") else -1.0
        for key in sorted(self.differences):
            alpha, k, p = key
            diff, se = self.differences[key]
            out.append(
                [f"{alpha:g}", str(k), f"{p:g}", f"{sign * diff:.12g}", f"{se:.12g}"]
            )
        return out


def run_comparison(config: ExperimentConfig) -> ComparisonResult:
    """Execute the full coupled comparison described by ``config``."""
    config.validate()
    h_values = {}
    for alpha in config.alphas:
        model = TruncatedStableModel(alpha)
        coeffs = make_sin_cos_example(model)
        h_values[alpha] = resolve_h(config, model, coeffs)

    tasks = [
        _LoopTask(
            alpha=alpha,
            methods=tuple(config.methods),
            benchmark_method=config.benchmark_method,
            h=h_values[alpha],
            loop=loop,
            scheme=config.scheme,
            eps_dc=config.eps_dc,
            eps_ar=config.eps_ar,
            benchmark_k=config.benchmark_k,
            coarse_ks=tuple(config.coarse_ks),
            trajectories=config.trajectories,
            master_seed=config.master_seed,
            horizon=config.horizon,
            x0=config.x0,
            sigma_mode=config.sigma_mode,
            compensate=config.compensate,
            small_jump_coupling=config.small_jump_coupling,
        )
        for alpha in config.alphas
        for loop in range(config.loops)
    ]

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_loop_task, tasks, chunksize=1))
    else:
        results = [_run_loop_task(t) for t in tasks]

    # Collate per-loop sups: (alpha, method, k) -> loop -> per-trajectory sups.
    sups: dict = {}
    for task, res in zip(tasks, results):
        for (method, k), vals in res.items():
            sups.setdefault((task.alpha, method, k), {})[task.loop] = vals

    table = ErrorTable()
    loop_estimates: dict = {}
    excluded: dict = {}
    for (alpha, method, k), per_loop in sups.items():
        arrays = [per_loop[loop] for loop in range(config.loops)]
        bad = int(sum(np.count_nonzero(np.isnan(a)) for a in arrays))
        excluded[(alpha, method, k)] = bad
        for p in config.p_values:
            ests = np.array(
                [estimate_lp(a[~np.isnan(a)], p)[0] for a in arrays]
            )
            loop_estimates[(alpha, method, k, p)] = ests
            mean = float(np.mean(ests))
            se = (
                float(np.std(ests, ddof=1)) / math.sqrt(config.loops)
                if config.loops > 1
                else 0.0
            )
            table.rows[(alpha, method, config.scheme, k, p)] = ErrorCell(
                mean, se, config.loops, bad, config.loops * config.trajectories
            )

    differences: dict = {}
    if len(config.methods) == 2:
        m0, m1 = config.methods
        for alpha in config.alphas:
            for k in config.coarse_ks:
                for p in config.p_values:
                    c0 = table.rows[(alpha, m0, config.scheme, k, p)]
                    c1 = table.rows[(alpha, m1, config.scheme, k, p)]
                    differences[(alpha, k, p)] = (
                        c0.error - c1.error,
                        math.hypot(c0.stderr, c1.stderr),
                    )

    return ComparisonResult(config, table, differences, loop_estimates, excluded, h_values)


# -- convergence-order fitting ---------------------------------------------------------


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    ci_low: float
    ci_high: float
    ns: tuple
    n_boot: int


def fit_convergence_order(
    ns,
    loop_errors,
    *,
    n_boot: int = 1000,
    seed: int = 20_240_101,
) -> SlopeFit:
    """Least-squares slope of log error against log n, with a bootstrap
    confidence interval over loops.

    ``loop_errors`` has shape (loops, len(ns)): per-loop error estimates at
    each resolution.  Resolutions whose mean error is nonpositive are
    excluded with a warning.
    """
    ns = np.asarray(ns, dtype=float)
    errs = np.atleast_2d(np.asarray(loop_errors, dtype=float))
    if ns.size < 3:
        raise ValueError("need at least 3 resolutions to fit a slope")
    if errs.shape[1] != ns.size:
        raise ValueError("loop_errors must have one column per resolution")
    means = errs.mean(axis=0)
    keep = means > 0.0
    if not keep.all():
        import warnings

        warnings.warn(
            f"excluding {np.count_nonzero(~keep)} resolutions with nonpositive errors"
        )
    ns_used = ns[keep]
    if ns_used.size < 3:
        raise ValueError("fewer than 3 usable resolutions after exclusion")
    log_n = np.log(ns_used)

    def slope_of(mean_errs: np.ndarray) -> float:
        return float(np.polyfit(log_n, np.log(mean_errs), 1)[0])

    point = slope_of(means[keep])
    rng = np.random.default_rng(seed)
    loops = errs.shape[0]
    boots = np.empty(n_boot)
    for b in range(n_boot):
        pick = rng.integers(0, loops, size=loops)
        resampled = errs[pick][:, keep].mean(axis=0)
        if np.any(resampled <= 0.0):
            boots[b] = np.nan
            continue
        boots[b] = slope_of(resampled)
    boots = boots[~np.isnan(boots)]
    lo, hi = np.percentile(boots, [2.5, 97.5]) if boots.size else (point, point)
    return SlopeFit(point, float(lo), float(hi), tuple(int(n) for n in ns_used), n_boot)


def rate_hint(scheme: int, alpha: float, p: float) -> float:
    """Jump-part convergence exponent used to annotate fitted slopes."""
    if scheme == 2:
        return (2.0 - alpha) / (2.0 * alpha) + 1.0 / (2.0 * p)
    p_star = min(p, 2.0)
    return (p_star - alpha) / (p_star * alpha)
