"""Fixed-threshold truncation baseline (Asmussen-Rosinski style).

Jumps with magnitude above a constant cutoff form a homogeneous compound
Poisson process; the removed small-jump part has a constant variance rate,
which the Gaussian-substitution scheme matches.  Size sampling inverts the
normalized restricted tail through the model's ``tau`` capability, so one
tested inverse serves both cutting methods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamic_cutting import JumpStream, side_is_active
from .measures import NEG, POS, LevyModel, _check_side

_EXP_CHUNK = 64


@dataclass(frozen=True)
class ArParams:
    """Constant jump-size cutoff and horizon."""

    threshold_eps: float
    horizon_T: float

    def __post_init__(self) -> None:
        if self.threshold_eps <= 0.0:
            raise ValueError(f"threshold_eps must be positive, got {self.threshold_eps}")
        if self.horizon_T <= 0.0:
            raise ValueError(f"horizon_T must be positive, got {self.horizon_T}")

    def threshold(self, model: LevyModel, side: int, s):
        s_arr = np.asarray(s, dtype=float)
        out = np.full_like(s_arr, self.threshold_eps, dtype=float)
        return float(out) if out.ndim == 0 else out


def ar_intensity(params: ArParams, model: LevyModel, side: int) -> float:
    """Constant one-sided rate: tail mass beyond the cutoff."""
    _check_side(side)
    rate = model.tail(side, params.threshold_eps)
    if not math.isfinite(rate):
        raise ValueError("tail mass beyond the cutoff is infinite")
    return float(rate)


def ar_size_cdf(params: ArParams, model: LevyModel, side: int, x) -> np.ndarray:
    """Normalized restricted-tail CDF of magnitudes above the cutoff."""
    rate = ar_intensity(params, model, side)
    if rate == 0.0:
        raise ValueError("no mass above the cutoff on this side")
    x_arr = np.asarray(x, dtype=float)
    tails = np.asarray(model.tail(side, x_arr), dtype=float)
    out = np.where(x_arr < params.threshold_eps, 0.0, 1.0 - tails / rate)
    return float(out) if out.ndim == 0 else out


def ar_size_inverse(params: ArParams, model: LevyModel, side: int, u) -> np.ndarray:
    """Inverse of :func:`ar_size_cdf` via the tail inverse at adjusted
    levels: magnitude ``tau(side, 1 / ((1-u) * rate))``."""
    rate = ar_intensity(params, model, side)
    if rate == 0.0:
        raise ValueError("no mass above the cutoff on this side")
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0.0) | (u_arr >= 1.0)):
        raise ValueError("u must lie in [0, 1)")
    out = np.asarray(model.tau(side, 1.0 / ((1.0 - u_arr) * rate)), dtype=float)
    return float(out) if out.ndim == 0 else out


def _homogeneous_times(rate: float, horizon: float, rng: np.random.Generator) -> np.ndarray:
    budget = rate * horizon
    if budget == 0.0:
        return np.empty(0)
    total = 0.0
    arrivals: list[np.ndarray] = []
    while True:
        cum = total + np.cumsum(rng.standard_exponential(_EXP_CHUNK))
        arrivals.append(cum[cum < budget])
        if cum[-1] >= budget:
            break
        total = cum[-1]
    return np.concatenate(arrivals) / rate


def ar_sample_jumps(
    params: ArParams, model: LevyModel, rng: np.random.Generator
) -> JumpStream:
    """Homogeneous Poisson times on ``(0, T)`` with restricted-tail sizes.

    Consumption order matches the dynamic-cut sampler: exponentials for
    times first, then uniforms for sizes, positive side before negative.
    """
    active = {
        side: side_is_active(model, side)
        and params.threshold_eps < model.support_radius
        for side in (POS, NEG)
    }
    times = {
        side: _homogeneous_times(
            ar_intensity(params, model, side), params.horizon_T, rng
        )
        if active[side]
        else np.empty(0)
        for side in (POS, NEG)
    }
    sizes = {}
    for side in (POS, NEG):
        if times[side].size:
            mags = ar_size_inverse(params, model, side, rng.random(times[side].size))
            sizes[side] = mags if side == POS else -mags
        else:
            sizes[side] = np.empty(0)
    return JumpStream.merge_sides(
        times[POS], sizes[POS], times[NEG], sizes[NEG], params
    )


def ar_small_jump_variance(params: ArParams, model: LevyModel) -> float:
    """Variance rate of the removed region: second moment of the measure
    below the cutoff, per unit time."""
    r = min(params.threshold_eps, model.support_radius)
    return model.truncated_abs_moment(2.0, r)
