"""Sampling of large jumps under a time-dependent truncation threshold.

Jumps of magnitude at least ``tau(side, (s*h)^eps)`` at time ``s`` are
retained; everything smaller is "small" and handled elsewhere (omitted or
replaced by a Gaussian).  The retained part of each side is an
inhomogeneous compound Poisson process with cumulative intensity

    lambda(t) = t^(1-eps) / (1-eps) * h^(-eps),

whose inverse is closed-form, so jump times are generated exactly by the
time-change method: push a unit-rate Poisson arrival sequence through
``inverse_lambda``.  Sizes are then drawn per event.

Two size laws appear here and must not be confused:

* :func:`jump_size_cdf` / :func:`inverse_jump_size_cdf` implement the
  two-branch piecewise law of a uniformly chosen retained jump on ``(0, t]``
  (mass ``eps`` sits below the time-``t`` threshold).  This is the law that
  makes the fixed-time compound-Poisson representation of the retained sum
  exact, and it is what the KS validation at a fixed arrival time targets.
* :func:`conditional_size_cdf` / :func:`conditional_size_inverse` implement
  the law of the size of the jump *arriving at* time ``t``: the measure
  restricted to magnitudes above the time-``t`` threshold, normalized.
  :func:`sample_jump_sizes` uses this law, so every sampled size respects
  its own arrival-time threshold and the ensemble of (time, size) pairs has
  exactly the retained process's mean measure.

The two are algebraically linked: the conditional inverse equals the
piecewise inverse evaluated at ``eps + (1-eps) * u``.

RNG consumption order is fixed: exponentials for times first, then uniforms
for sizes, positive side before negative.  Each purpose should own a
dedicated substream so that trajectories are bit-reproducible across
parallel schedules.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .measures import NEG, POS, IntegrabilityError, LevyModel, _check_side

_EXP_CHUNK = 64


class ThresholdSupportWarning(UserWarning):
    """The cut threshold reached the edge of the measure's support.

    The large-jump law is then concentrated at the support edge; this is a
    configuration problem (h too large), not a sampling bug.
    """


@dataclass(frozen=True)
class CutParams:
    """Dynamic-cut parameters: exponent ``epsilon``, time scale ``h``,
    horizon ``T``."""

    epsilon: float
    h: float
    horizon_T: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.h <= 0.0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.horizon_T <= 0.0:
            raise ValueError(f"horizon_T must be positive, got {self.horizon_T}")

    def cut_level(self, s) -> np.ndarray:
        """Tail-inverse argument ``(s*h)^epsilon`` at time ``s``."""
        return (np.asarray(s, dtype=float) * self.h) ** self.epsilon

    def threshold(self, model: LevyModel, side: int, s):
        """Jump-size threshold ``tau(side, (s*h)^eps)``; nondecreasing in s."""
        return model.tau(side, self.cut_level(s)) if np.all(np.asarray(s) > 0) else (
            model.tau(side, np.maximum(self.cut_level(s), 1e-300))
        )


@dataclass
class JumpStream:
    """Sampled large-jump events of one trajectory, merged across sides.

    ``times`` is strictly increasing; ``sizes`` are signed.  ``sides``
    records which half-line each event came from.
    """

    times: np.ndarray
    sizes: np.ndarray
    sides: np.ndarray
    generated_with: object = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.sizes = np.asarray(self.sizes, dtype=float)
        self.sides = np.asarray(self.sides, dtype=np.int8)
        if not (self.times.shape == self.sizes.shape == self.sides.shape):
            raise ValueError("times, sizes, sides must have equal shapes")
        if self.times.size and np.any(np.diff(self.times) < 0.0):
            raise ValueError("jump times must be sorted ascending")

    def __len__(self) -> int:
        return int(self.times.size)

    @classmethod
    def empty(cls) -> "JumpStream":
        return cls(np.empty(0), np.empty(0), np.empty(0, dtype=np.int8))

    @classmethod
    def merge_sides(
        cls,
        pos_times: np.ndarray,
        pos_sizes: np.ndarray,
        neg_times: np.ndarray,
        neg_sizes: np.ndarray,
        params: object = None,
    ) -> "JumpStream":
        times = np.concatenate([pos_times, neg_times])
        sizes = np.concatenate([pos_sizes, neg_sizes])
        sides = np.concatenate(
            [np.full(len(pos_times), POS, np.int8), np.full(len(neg_times), NEG, np.int8)]
        )
        order = np.argsort(times, kind="stable")
        return cls(times[order], sizes[order], sides[order], generated_with=params)


# -- intensity --------------------------------------------------------------


def intensity_lambda(params: CutParams, side: int, t: float) -> float:
    """Expected number of retained jumps on ``(0, t]`` for one side.

    Valid for measures with infinite activity on that side, where the tail
    attains the level ``1/(s*h)^eps`` for every ``s``; then the retained
    rate at time ``s`` is exactly ``(s*h)^(-eps)``.
    """
    _check_side(side)
    t = float(t)
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return 0.0
    eps = params.epsilon
    return t ** (1.0 - eps) / (1.0 - eps) * params.h ** (-eps)


def inverse_lambda(params: CutParams, u: float) -> float:
    """Time at which the cumulative one-sided intensity reaches ``u``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0.0):
        raise ValueError("u must be nonnegative")
    eps = params.epsilon
    out = (u * (1.0 - eps) * params.h**eps) ** (1.0 / (1.0 - eps))
    return float(out) if out.ndim == 0 else out


def sample_jump_times(
    params: CutParams, side: int, rng: np.random.Generator
) -> np.ndarray:
    """Retained-jump arrival times on ``(0, T)`` for one side.

    Time-change construction: cumulative sums of unit exponentials pushed
    through ``inverse_lambda``, truncated at the horizon.  Exponentials are
    drawn in chunks; the consumed prefix is identical to one-at-a-time
    draws from the same stream.
    """
    _check_side(side)
    budget = intensity_lambda(params, side, params.horizon_T)
    total = 0.0
    arrivals: list[np.ndarray] = []
    while True:
        chunk = rng.standard_exponential(_EXP_CHUNK)
        cum = total + np.cumsum(chunk)
        arrivals.append(cum[cum < budget])
        if cum[-1] >= budget:
            break
        total = cum[-1]
    gammas = np.concatenate(arrivals)
    return inverse_lambda(params, gammas)


# -- size laws ---------------------------------------------------------------


def jump_size_cdf(
    params: CutParams, model: LevyModel, side: int, t: float, x
) -> np.ndarray:
    """Piecewise CDF of the magnitude of a retained jump on ``(0, t]``.

    With ``N`` the one-sided tail and level ``L = (t*h)^(-eps)``:

    * ``N(x) >= L``:  ``(1/(t*h))^(1-eps) * eps * N(x)^((eps-1)/eps)``
    * ``N(x) <  L``:  ``1 - (1-eps) * (t*h)^eps * N(x)``

    Both branches meet continuously with value ``eps`` at the threshold.
    """
    _check_side(side)
    if t <= 0.0:
        raise ValueError("t must be positive")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("x must be positive")
    eps = params.epsilon
    th = t * params.h
    tails = np.asarray(model.tail(side, x_arr), dtype=float)
    level = th ** (-eps)
    with np.errstate(divide="ignore"):  # zero tail only hits the dead branch
        first = (1.0 / th) ** (1.0 - eps) * eps * tails ** ((eps - 1.0) / eps)
    second = 1.0 - (1.0 - eps) * th**eps * tails
    out = np.where(tails >= level, first, second)
    return float(out) if out.ndim == 0 else out


def inverse_jump_size_cdf(
    params: CutParams, model: LevyModel, side: int, t: float, u
) -> np.ndarray:
    """Inverse of :func:`jump_size_cdf`; branch ``u <= eps`` ties to the
    low branch (the two agree at ``u = eps``)."""
    _check_side(side)
    if t <= 0.0:
        raise ValueError("t must be positive")
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0.0) | (u_arr >= 1.0)):
        raise ValueError("u must lie strictly inside (0, 1)")
    eps = params.epsilon
    th_eps = (t * params.h) ** eps
    low = th_eps * (u_arr / eps) ** (eps / (1.0 - eps))
    high = (1.0 - eps) * th_eps / (1.0 - u_arr)
    levels = np.where(u_arr <= eps, low, high)
    out = np.asarray(model.tau(side, levels), dtype=float)
    return float(out) if out.ndim == 0 else out


def conditional_size_cdf(
    params: CutParams, model: LevyModel, side: int, t: float, x
) -> np.ndarray:
    """CDF of the size of the jump arriving exactly at time ``t``:
    the measure above the time-``t`` threshold, normalized."""
    _check_side(side)
    if t <= 0.0:
        raise ValueError("t must be positive")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise ValueError("x must be positive")
    th_eps = (t * params.h) ** params.epsilon
    threshold = model.tau(side, th_eps)
    tails = np.asarray(model.tail(side, x_arr), dtype=float)
    out = np.where(x_arr < threshold, 0.0, 1.0 - th_eps * tails)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def conditional_size_inverse(
    params: CutParams, model: LevyModel, side: int, t, u
) -> np.ndarray:
    """Inverse of :func:`conditional_size_cdf`, vectorized over ``t``/``u``.

    Equals ``inverse_jump_size_cdf`` at ``eps + (1-eps)*u``; output is
    always at least the time-``t`` threshold.
    """
    _check_side(side)
    t_arr = np.asarray(t, dtype=float)
    u_arr = np.asarray(u, dtype=float)
    if np.any(t_arr <= 0.0):
        raise ValueError("t must be positive")
    if np.any((u_arr < 0.0) | (u_arr >= 1.0)):
        raise ValueError("u must lie in [0, 1)")
    th_eps = (t_arr * params.h) ** params.epsilon
    out = np.asarray(model.tau(side, th_eps / (1.0 - u_arr)), dtype=float)
    return float(out) if out.ndim == 0 else out


def sample_jump_sizes(
    params: CutParams,
    model: LevyModel,
    side: int,
    times: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """One signed size per arrival time, via the conditional law at each
    time.  Negative side emits negated magnitudes."""
    _check_side(side)
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.empty(0)
    edge = params.threshold(model, side, float(times[0]))
    if edge >= model.support_radius:
        warnings.warn(
            "cut threshold reached the support edge; jump sizes degenerate "
            "to the edge value (h is too large for this measure)",
            ThresholdSupportWarning,
        )
    u = rng.random(times.size)
    magnitudes = conditional_size_inverse(params, model, side, times, u)
    return magnitudes if side == POS else -magnitudes


def side_is_active(model: LevyModel, side: int) -> bool:
    """Whether the measure carries any mass on the given half-line."""
    probe = min(1e-9, model.support_radius * 1e-9)
    return model.tail(side, probe) > 0.0


def sample_jump_stream(
    params: CutParams, model: LevyModel, rng: np.random.Generator
) -> JumpStream:
    """Full two-sided stream for one trajectory.

    Consumption order is fixed: exponentials for times first, then uniforms
    for sizes, positive side before negative within each phase.
    """
    active = {side: side_is_active(model, side) for side in (POS, NEG)}
    times = {
        side: sample_jump_times(params, side, rng) if active[side] else np.empty(0)
        for side in (POS, NEG)
    }
    sizes = {
        side: sample_jump_sizes(params, model, side, times[side], rng)
        if active[side]
        else np.empty(0)
        for side in (POS, NEG)
    }
    return JumpStream.merge_sides(times[POS], sizes[POS], times[NEG], sizes[NEG], params)


# -- coupled two-method jump field --------------------------------------------


def union_intensity(params: CutParams, floor_rate: float, t: float) -> float:
    """Cumulative intensity of jumps above ``min(dynamic threshold,
    constant threshold)``: the pointwise max of the dynamic rate
    ``(s*h)^(-eps)`` and the constant rate ``floor_rate``."""
    if t <= 0.0:
        return 0.0
    if floor_rate <= 0.0:
        return intensity_lambda(params, POS, t)
    s_star = floor_rate ** (-1.0 / params.epsilon) / params.h
    if t <= s_star:
        return intensity_lambda(params, POS, t)
    return intensity_lambda(params, POS, s_star) + floor_rate * (t - s_star)


def union_inverse_intensity(params: CutParams, floor_rate: float, u) -> np.ndarray:
    u_arr = np.asarray(u, dtype=float)
    if floor_rate <= 0.0:
        out = inverse_lambda(params, u_arr)
        return float(out) if out.ndim == 0 else out
    s_star = floor_rate ** (-1.0 / params.epsilon) / params.h
    u_star = intensity_lambda(params, POS, s_star)
    out = np.where(
        u_arr <= u_star,
        inverse_lambda(params, np.minimum(u_arr, u_star)),
        s_star + (u_arr - u_star) / floor_rate,
    )
    return float(out) if out.ndim == 0 else out


def _sample_union_times(
    params: CutParams, floor_rate: float, rng: np.random.Generator
) -> np.ndarray:
    budget = union_intensity(params, floor_rate, params.horizon_T)
    total = 0.0
    arrivals: list[np.ndarray] = []
    while True:
        cum = total + np.cumsum(rng.standard_exponential(_EXP_CHUNK))
        arrivals.append(cum[cum < budget])
        if cum[-1] >= budget:
            break
        total = cum[-1]
    return union_inverse_intensity(params, floor_rate, np.concatenate(arrivals))


def sample_union_stream(
    params: CutParams,
    ar_threshold: float,
    model: LevyModel,
    rng: np.random.Generator,
) -> JumpStream:
    """Jumps above the *pointwise smaller* of the dynamic and constant
    thresholds, so both cutting methods' retained streams are subsets of
    one realization (common-random-numbers coupling across methods).

    Consumption order matches :func:`sample_jump_stream`: exponentials for
    times first, then uniforms for sizes, positive side before negative.
    """
    active = {side: side_is_active(model, side) for side in (POS, NEG)}
    floor = {
        side: float(model.tail(side, ar_threshold)) if active[side] else 0.0
        for side in (POS, NEG)
    }
    times = {
        side: _sample_union_times(params, floor[side], rng)
        if active[side]
        else np.empty(0)
        for side in (POS, NEG)
    }
    sizes = {}
    for side in (POS, NEG):
        ts = times[side]
        if ts.size == 0:
            sizes[side] = np.empty(0)
            continue
        rate = np.maximum(params.cut_level(ts) ** -1.0, floor[side])
        u = rng.random(ts.size)
        mags = np.asarray(
            model.tau(side, 1.0 / ((1.0 - u) * rate)), dtype=float
        )
        sizes[side] = mags if side == POS else -mags
    return JumpStream.merge_sides(times[POS], sizes[POS], times[NEG], sizes[NEG], params)


# -- compensator and small-jump variance -------------------------------------


def compensated_drift(params: CutParams, model: LevyModel, t: float) -> float:
    """Time integral of the first moment of the retained (large-jump)
    region; exactly zero for symmetric measures."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if t == 0.0 or model.symmetric:
        return 0.0

    def first_moment(s: float) -> float:
        total = 0.0
        for side in (POS, NEG):
            if not side_is_active(model, side):
                continue
            r = params.threshold(model, side, s)
            val = model.restricted_integral(lambda z: z, r, model.support_radius, side)
            if not math.isfinite(val):
                raise IntegrabilityError(
                    "first moment of the retained region diverges"
                )
            total += val
        return total

    val, _err = quad(first_moment, 0.0, t, epsabs=1e-9, epsrel=1e-9, limit=200)
    return val


def small_jump_variance_rate(params: CutParams, model: LevyModel, s: float) -> float:
    """Instantaneous variance of removed jumps at time ``s``:
    second moment of the measure below the per-side thresholds."""
    if s <= 0.0:
        raise ValueError("s must be positive")
    total = 0.0
    for side in (POS, NEG):
        r = params.threshold(model, side, s)
        total += model.truncated_abs_moment_side(side, 2.0, r)
    return total


# -- distributional validation ------------------------------------------------


@dataclass(frozen=True)
class LaplaceCheck:
    r: float
    empirical: float
    expected: float
    rel_error: float
    usable: bool


def laplace_exponent(params: CutParams, model: LevyModel, t: float, r: float) -> float:
    """Quadrature of the retained positive-side Laplace exponent
    ``int_0^t int_{u > threshold(s)} (1 - exp(-r*u)) nu(du) ds``."""
    if r == 0.0:
        return 0.0

    def inner(s: float) -> float:
        lo = params.threshold(model, POS, s)
        return model.restricted_integral(
            lambda z: 1.0 - math.exp(-r * z), lo, model.support_radius, POS
        )

    val, _err = quad(inner, 0.0, t, epsabs=1e-9, epsrel=1e-9, limit=400)
    return val


def sample_positive_sums(
    params: CutParams,
    model: LevyModel,
    t: float,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Vectorized draws of the retained positive-jump sum at time ``t``.

    Uses the order-statistics representation of the inhomogeneous Poisson
    process (counts Poisson(lambda(t)), arrival levels uniform on
    [0, lambda(t)]), with each event's size from the conditional law at its
    own arrival time; same law as summing a sampled stream, much faster.
    """
    budget = intensity_lambda(params, POS, t)
    counts = rng.poisson(budget, size=n_samples)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(n_samples)
    gammas = budget * rng.random(total)
    times = inverse_lambda(params, gammas)
    sizes = conditional_size_inverse(params, model, POS, times, rng.random(total))
    owner = np.repeat(np.arange(n_samples), counts)
    return np.bincount(owner, weights=sizes, minlength=n_samples)


def empirical_laplace_check(
    params: CutParams,
    model: LevyModel,
    t: float,
    r_values,
    n_samples: int,
    rng: np.random.Generator,
) -> list[LaplaceCheck]:
    """Monte Carlo Laplace transform of the positive retained sum vs the
    quadrature of its exponent; returns one relative error per ``r``."""
    if any(r < 0.0 for r in r_values):
        raise ValueError("r_values must be nonnegative")
    z = sample_positive_sums(params, model, t, n_samples, rng)
    out = []
    for r in r_values:
        expected = laplace_exponent(params, model, t, float(r))
        mean = float(np.mean(np.exp(-float(r) * z)))
        if mean <= 0.0:
            out.append(LaplaceCheck(float(r), math.inf, expected, math.inf, False))
            continue
        empirical = -math.log(mean)
        if expected == 0.0:
            rel = abs(empirical)
        else:
            rel = abs(empirical - expected) / abs(expected)
        out.append(LaplaceCheck(float(r), empirical, expected, rel, True))
    return out
