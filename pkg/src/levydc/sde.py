"""SDE coefficient sets and the per-interval small-jump variance.

The driving equation is ``dX = a(t,X) dt + b(t,X) dB + jumps``, with jump
coefficient ``c(t, x, z)`` applied to each retained jump and the removed
small-jump region either ignored or replaced by a Gaussian whose variance
matches ``sigma_i^2(x) = int_{t0}^{t1} int_{small} c^2(s,x,z) nu(dz) ds``.

Two evaluation paths exist for that variance: a left-endpoint closed form
(``c^2``-weighted second moment at the interval's left edge times the
interval length) and full adaptive quadrature.  The closed form is the
default for coefficient sets that supply one; the quadrature path is exact
up to tolerance and additive over adjacent intervals.

Regularity exponents that govern only the convergence analysis (Holder and
integrability indices of the coefficients) have no runtime role and are
deliberately not represented here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .measures import NEG, POS, IntegrabilityError, LevyModel


@dataclass(frozen=True)
class CoefficientSet:
    """Drift ``a(t,x)``, diffusion ``b(t,x)``, and jump ``c(t,x,z)``.

    ``drift`` and ``diffusion`` must accept numpy arrays in ``x``.
    ``jump_factor`` declares the multiplicative structure
    ``c(t,x,z) = jump_factor(t,x) * z`` when it holds; the vectorized path
    engine requires it.  ``c_squared_nu_closed_form(x, r)`` evaluates
    ``int_{|z|<=r} c(.,x,z)^2 nu(dz)`` analytically when available.
    ``symmetric_compensation`` declares that ``z -> c(t,x,z)`` integrates to
    zero against the measure's large region (odd coefficient, symmetric
    measure), so compensator corrections vanish identically.
    """

    drift: Callable
    diffusion: Optional[Callable]
    jump: Callable
    jump_factor: Optional[Callable] = None
    c_squared_nu_closed_form: Optional[Callable] = None
    symmetric_compensation: bool = False


def make_sin_cos_example(model: LevyModel) -> CoefficientSet:
    """The bounded worked example: ``a = sin(x)``, ``b = 0``,
    ``c = cos(x) * z``; symmetric measure makes the compensator vanish."""

    def csq(x, r):
        return np.cos(np.asarray(x, dtype=float)) ** 2 * model.truncated_abs_moment(
            2.0, float(r)
        )

    return CoefficientSet(
        drift=lambda t, x: np.sin(x),
        diffusion=None,
        jump=lambda t, x, z: np.cos(x) * z,
        jump_factor=lambda t, x: np.cos(x),
        c_squared_nu_closed_form=csq,
        symmetric_compensation=model.symmetric,
    )


def sigma_small_sq(
    coeffs: CoefficientSet,
    model: LevyModel,
    params,
    x: float,
    t0: float,
    t1: float,
    mode: str = "auto",
) -> float:
    """Variance of the Gaussian substitute on ``[t0, t1]`` at frozen state x.

    ``params`` supplies the per-side thresholds through
    ``params.threshold(model, side, s)`` (works for both cutting methods).
    ``mode`` is ``"closed-form"`` (left-endpoint), ``"quadrature"``, or
    ``"auto"`` (closed form when the coefficients carry one).
    """
    if not 0.0 <= t0 <= t1:
        raise ValueError("need 0 <= t0 <= t1")
    if t0 == t1:
        return 0.0
    if mode == "auto":
        mode = (
            "closed-form" if coeffs.c_squared_nu_closed_form is not None else "quadrature"
        )
    if mode == "closed-form":
        if coeffs.c_squared_nu_closed_form is None:
            raise ValueError("coefficients carry no closed form for c^2 * nu")
        s_ref = t0 if t0 > 0.0 else min(t1, 1e-12)
        r_pos = float(params.threshold(model, POS, s_ref))
        r_neg = float(params.threshold(model, NEG, s_ref))
        if r_pos != r_neg:
            raise ValueError(
                "closed-form sigma assumes equal per-side thresholds; "
                "use quadrature mode for asymmetric cuts"
            )
        return float(coeffs.c_squared_nu_closed_form(x, r_pos)) * (t1 - t0)
    if mode != "quadrature":
        raise ValueError(f"unknown sigma mode {mode!r}")

    def rate(s: float) -> float:
        total = 0.0
        for side in (POS, NEG):
            r = float(params.threshold(model, side, s))
            if r <= 0.0:
                continue
            total += model.restricted_integral(
                lambda z: float(coeffs.jump(s, x, z)) ** 2, 0.0, r, side
            )
        return total

    val, _err = quad(rate, t0, t1, epsabs=1e-12, epsrel=1e-10, limit=200)
    return val


def large_jump_compensator(
    coeffs: CoefficientSet,
    model: LevyModel,
    params,
    x: float,
    t0: float,
    t1: float,
) -> float:
    """Mean of the retained-jump contribution over ``[t0, t1]`` at frozen x,
    subtracted from the Euler step so retained jumps stay compensated.
    Exactly zero when the coefficients declare symmetric compensation."""
    if not 0.0 <= t0 <= t1:
        raise ValueError("need 0 <= t0 <= t1")
    if t0 == t1 or coeffs.symmetric_compensation:
        return 0.0

    def rate(s: float) -> float:
        total = 0.0
        for side in (POS, NEG):
            r = float(params.threshold(model, side, s))
            val = model.restricted_integral(
                lambda z: float(coeffs.jump(s, x, z)), r, model.support_radius, side
            )
            if not math.isfinite(val):
                raise IntegrabilityError("compensator integral diverges")
            total += val
        return total

    val, _err = quad(rate, t0, t1, epsabs=1e-10, epsrel=1e-8, limit=200)
    return val


def large_jump_mean_rate(
    coeffs: CoefficientSet, model: LevyModel, params, s: float
) -> float:
    """State-free mean rate ``int_{large} z nu(dz)`` at time ``s``;
    multiplied by ``jump_factor(t, x)`` this is the compensator rate for
    multiplicative coefficients."""
    total = 0.0
    for side in (POS, NEG):
        r = float(params.threshold(model, side, s))
        total += model.restricted_integral(
            lambda z: z, r, model.support_radius, side
        )
    return total
