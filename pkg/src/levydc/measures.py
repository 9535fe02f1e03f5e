"""One-dimensional Levy measures presented through computable quantities.

A :class:`LevyModel` bundles the capabilities the jump-truncation samplers
need: one-sided tail functions, their generalized inverses, truncated
absolute moments, and quadrature against the restricted measure.  Closed
forms are used when the model supplies them; otherwise monotone bisection
(for inverses) and adaptive quadrature with logarithmic stretching near the
origin (for integrals) are used as numeric fallbacks.

Sides are encoded as integers: ``+1`` for the positive half-line, ``-1``
for the negative one.  Tail conventions:

* ``tail(+1, r)`` is the measure of ``(r, inf)``,
* ``tail(-1, r)`` is the measure of ``(-inf, -r)``,
* ``tau(side, t)`` is ``sup { r >= 0 : tail(side, r) >= 1/t }``.

Tails are nonincreasing and right-continuous; at (and beyond) the edge of
the support they return exactly 0.  Ties in the generalized inverse resolve
to the supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

POS = 1
NEG = -1

# Numeric-fallback tolerances.  Bisection is relative; quadrature applies
# both bounds through scipy's adaptive routine.
_BISECT_RTOL = 1e-12
_QUAD_RTOL = 1e-10
_QUAD_ATOL = 1e-10


class DegenerateModelError(ValueError):
    """The measure carries no mass where an operation requires some."""


class PlateauError(RuntimeError):
    """A numeric tail inverse hit a flat tail segment.

    The generalized inverse is still well defined on plateaus, but the
    numeric machinery assumes strict monotonicity on the support interior,
    so flat segments are reported instead of silently resolved.
    """


class IntegrabilityError(ValueError):
    """A requested moment or compensator integral diverges."""


def _check_side(side: int) -> int:
    if side not in (POS, NEG):
        raise ValueError(f"side must be +1 or -1, got {side!r}")
    return side


def log_stretched_integral(
    f: Callable[[float], float],
    r1: float,
    r2: float,
    *,
    rtol: float = _QUAD_RTOL,
    atol: float = _QUAD_ATOL,
) -> float:
    """Integrate ``f`` over magnitudes ``(r1, r2]`` with an ``m = exp(-u)``
    substitution.

    The substitution turns a power-law blow-up of ``f`` at ``m = 0`` into an
    exponentially decaying integrand, which adaptive quadrature handles
    reliably.  ``r1 = 0`` maps to an infinite upper limit.
    """
    if r2 <= r1:
        return 0.0
    lo = math.log(1.0 / r2)
    hi = math.inf if r1 <= 0.0 else math.log(1.0 / r1)

    def transformed(u: float) -> float:
        m = math.exp(-u)
        if m == 0.0:
            # integrable singularities vanish in the stretched variable
            return 0.0
        try:
            val = f(m) * m
        except OverflowError:
            # The density factor alone can overflow near the origin even
            # though the integrable product is negligible there.  Large-m
            # overflows are genuine divergences and must propagate.
            return 0.0 if m < 1.0 else math.inf
        if math.isfinite(val) or m >= 1.0:
            return val
        return 0.0

    val, _err = quad(transformed, lo, hi, epsabs=atol, epsrel=rtol, limit=200)
    return val


class LevyModel:
    """A Levy measure described by per-side capabilities.

    Parameters
    ----------
    tail_pos, tail_neg:
        One-sided tail mass functions of ``r > 0``.
    support_radius:
        Supremum of ``|z|`` over the support (``inf`` allowed).  Used to
        bracket inverses and bound quadrature.
    alpha:
        Stability-like index in ``(0, 2)`` used for convergence-rate hints;
        optional metadata, not used by any numeric routine.
    symmetric:
        Declares the measure symmetric under ``z -> -z``; lets drift
        compensators short-circuit to exact zero.
    density_pos, density_neg:
        Optional Lebesgue densities as functions of the magnitude ``m > 0``
        (the negative side's density is evaluated at ``z = -m``).  Required
        for quadrature-backed capabilities.
    tau_pos, tau_neg:
        Optional closed-form generalized tail inverses.
    truncated_moment_side:
        Optional closed form ``(side, p, r) -> integral of |z|^p`` over
        magnitudes in ``(0, r]`` on one side.
    """

    def __init__(
        self,
        tail_pos: Callable[[float], float],
        tail_neg: Callable[[float], float],
        *,
        support_radius: float,
        alpha: Optional[float] = None,
        symmetric: bool = False,
        density_pos: Optional[Callable[[float], float]] = None,
        density_neg: Optional[Callable[[float], float]] = None,
        tau_pos: Optional[Callable[[float], float]] = None,
        tau_neg: Optional[Callable[[float], float]] = None,
        truncated_moment_side: Optional[Callable[[int, float, float], float]] = None,
    ) -> None:
        self._tail = {POS: tail_pos, NEG: tail_neg}
        self.support_radius = float(support_radius)
        self.alpha = alpha
        self.symmetric = bool(symmetric)
        self._density = {POS: density_pos, NEG: density_neg}
        self._tau = {POS: tau_pos, NEG: tau_neg}
        self._trunc_moment = truncated_moment_side
        self.has_closed_forms = (
            tau_pos is not None
            and tau_neg is not None
            and truncated_moment_side is not None
        )

    # -- tails and inverses -------------------------------------------------

    def tail(self, side: int, r) -> float:
        """One-sided tail mass beyond magnitude ``r > 0``."""
        _check_side(side)
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr <= 0.0):
            raise ValueError("tail requires r > 0")
        out = np.asarray(self._tail[side](r_arr), dtype=float)
        # Right-continuity convention: exactly 0 at and beyond the edge.
        out = np.where(r_arr >= self.support_radius, 0.0, out)
        if out.ndim == 0:
            return float(out)
        return out

    def tau(self, side: int, t) -> float:
        """Generalized inverse of the tail at level ``1/t``, ``t > 0``."""
        _check_side(side)
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr <= 0.0):
            raise ValueError("tau requires t > 0")
        if self._tau[side] is not None:
            out = np.asarray(self._tau[side](t_arr), dtype=float)
            return float(out) if out.ndim == 0 else out
        if t_arr.ndim == 0:
            return self._tau_bisect(side, float(t_arr))
        return np.array([self._tau_bisect(side, ti) for ti in t_arr.ravel()]).reshape(
            t_arr.shape
        )

    def _tau_bisect(self, side: int, t: float) -> float:
        level = 1.0 / t
        lo = 1e-15
        hi = self.support_radius
        if not math.isfinite(hi):
            hi = 1.0
            while self.tail(side, hi) >= level:
                hi *= 8.0
                if hi > 1e300:
                    raise IntegrabilityError("tail never drops below 1/t")
        # Expand the lower end of the bracket if the inverse sits below it.
        while self.tail(side, lo) < level:
            lo *= 1e-3
            if lo < 1e-300:
                return 0.0
        # Predicate tail(r) >= level is true on the left, false on the right;
        # bisection converges to the supremum of the true set.
        while hi - lo > _BISECT_RTOL * hi:
            mid = 0.5 * (lo + hi)
            if self.tail(side, mid) >= level:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        self._detect_plateau(side, root, level)
        return root

    def _detect_plateau(self, side: int, root: float, level: float) -> None:
        # A tail that is numerically constant across the probe window cannot
        # be inverted reliably: the bisection may have stopped anywhere on
        # the flat stretch instead of at its supremum.
        delta = max(root * 1e-7, 1e-290)
        left = root - delta
        right = root + delta
        if left <= 0.0 or right >= self.support_radius:
            return
        f_left = self.tail(side, left)
        f_right = self.tail(side, right)
        if f_right <= 0.0:
            return
        if abs(f_left - f_right) <= 8.0 * np.finfo(float).eps * abs(f_left):
            raise PlateauError(
                f"tail is flat near r={root:.6g} (level {level:.6g}); "
                "generalized inverse undefined for the numeric fallback"
            )

    # -- moments and quadrature ----------------------------------------------

    def restricted_integral(
        self,
        g: Callable[[float], float],
        r1: float,
        r2: float,
        side: Optional[int] = None,
    ) -> float:
        """Integrate ``g(z)`` against the measure over ``{r1 < |z| <= r2}``.

        ``g`` receives the signed coordinate.  ``side=None`` integrates over
        both half-lines; otherwise only the requested one.
        """
        if r1 < 0.0:
            raise ValueError("r1 must be >= 0")
        r2 = min(r2, self.support_radius)
        if side is None:
            return self.restricted_integral(g, r1, r2, POS) + self.restricted_integral(
                g, r1, r2, NEG
            )
        _check_side(side)
        density = self._density[side]
        if density is None:
            raise NotImplementedError(
                "restricted_integral needs a density for this side"
            )
        if side == POS:
            f = lambda m: g(m) * density(m)
        else:
            f = lambda m: g(-m) * density(m)
        return log_stretched_integral(f, r1, r2)

    def truncated_abs_moment_side(self, side: int, p: float, r) -> float:
        """``integral of |z|^p`` over one side's magnitudes in ``(0, r]``.

        Accepts arrays of radii when the model carries closed forms.
        """
        _check_side(side)
        if p < 0.0:
            raise ValueError("p must be >= 0")
        r_arr = np.minimum(np.asarray(r, dtype=float), self.support_radius)
        if self._trunc_moment is not None:
            out = np.asarray(self._trunc_moment(side, p, r_arr), dtype=float)
            out = np.where(r_arr <= 0.0, 0.0, out)
            return float(out) if out.ndim == 0 else out
        if r_arr.ndim > 0:
            return np.array(
                [self.truncated_abs_moment_side(side, p, ri) for ri in r_arr]
            )
        if r_arr <= 0.0:
            return 0.0
        return self.restricted_integral(lambda z: abs(z) ** p, 0.0, float(r_arr), side)

    def truncated_abs_moment(self, p: float, r: float) -> float:
        """Two-sided truncated absolute moment over ``{0 < |z| <= r}``."""
        return self.truncated_abs_moment_side(POS, p, r) + self.truncated_abs_moment_side(
            NEG, p, r
        )

    def pruitt_psi(self, side: int, xi: float) -> float:
        """Truncated second-moment functional ``xi^2 * m2(side, 1/xi)``."""
        _check_side(side)
        if xi <= 0.0:
            raise ValueError("pruitt_psi requires xi > 0")
        radius = min(1.0 / xi, self.support_radius)
        return xi**2 * self.truncated_abs_moment_side(side, 2.0, radius)


class TruncatedStableModel(LevyModel):
    """Stable-like measure with density ``|z|^(-1-alpha)`` cut at ``|z| = 1``.

    All tails, inverses, and truncated moments are closed-form:

    * ``tail(+-1, r) = (r^-alpha - 1) / alpha`` on ``(0, 1]``, zero beyond,
    * ``tau(+-1, t) = (t / (alpha + t))^(1/alpha)``,
    * one-sided ``|z|^p`` moment up to ``r <= 1``: ``r^(p-alpha) / (p-alpha)``
      for ``p > alpha`` (divergent otherwise).
    """

    def __init__(self, alpha: float) -> None:
        if not 0.0 < alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
        a = float(alpha)

        def tail(r):
            r = np.asarray(r, dtype=float)
            inside = np.clip(r, None, 1.0)
            out = np.where(r < 1.0, (inside ** (-a) - 1.0) / a, 0.0)
            return out

        def tau(t):
            t = np.asarray(t, dtype=float)
            return (t / (a + t)) ** (1.0 / a)

        def moment(side, p, r):
            if p <= a:
                raise IntegrabilityError(
                    f"|z|^{p} is not integrable near 0 for alpha={a}"
                )
            r = np.minimum(np.asarray(r, dtype=float), 1.0)
            return np.maximum(r, 0.0) ** (p - a) / (p - a)

        super().__init__(
            tail,
            tail,
            support_radius=1.0,
            alpha=a,
            symmetric=True,
            density_pos=lambda m: m ** (-1.0 - a) if m <= 1.0 else 0.0,
            density_neg=lambda m: m ** (-1.0 - a) if m <= 1.0 else 0.0,
            tau_pos=tau,
            tau_neg=tau,
            truncated_moment_side=moment,
        )


@dataclass(frozen=True)
class TailPruittReport:
    """Extremes of ``tail(r) / pruitt_psi(1/r)`` over a radius grid."""

    min_ratio: float
    max_ratio: float

    def bounded(self) -> bool:
        return math.isfinite(self.max_ratio) and self.min_ratio > 0.0


def check_tail_pruitt_equivalence(model: LevyModel, r_grid) -> TailPruittReport:
    """Compare tail decay against the truncated second-moment functional.

    Returns the min and max of ``N(r) / psi(1/r)`` over both sides of the
    grid.  A measure with no mass on the grid is reported as degenerate.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size == 0:
        raise ValueError("r_grid must be nonempty")
    if np.any((r_grid <= 0.0) | (r_grid > 1.0)):
        raise ValueError("r_grid radii must lie in (0, 1]")
    ratios = []
    for side in (POS, NEG):
        tails = np.array([model.tail(side, r) for r in r_grid])
        if np.all(tails == 0.0):
            continue
        psis = np.array([model.pruitt_psi(side, 1.0 / r) for r in r_grid])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios.append(np.where(psis > 0.0, tails / psis, np.inf))
    if not ratios:
        raise DegenerateModelError("measure carries no mass on (0, 1] either side")
    stacked = np.concatenate(ratios)
    return TailPruittReport(float(stacked.min()), float(stacked.max()))


def make_one_sided_stable(alpha: float) -> LevyModel:
    """Positive-side-only variant of the truncated stable measure.

    Useful for exercising asymmetric code paths (drift compensators,
    one-sided sampling) against closed forms.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    a = float(alpha)

    def tail_pos(r):
        r = np.asarray(r, dtype=float)
        inside = np.clip(r, None, 1.0)
        return np.where(r < 1.0, (inside ** (-a) - 1.0) / a, 0.0)

    def tail_neg(r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def moment(side, p, r):
        if p <= a:
            raise IntegrabilityError(f"|z|^{p} is not integrable near 0 for alpha={a}")
        r = np.minimum(np.asarray(r, dtype=float), 1.0)
        if side == NEG:
            return np.zeros_like(r)
        return np.maximum(r, 0.0) ** (p - a) / (p - a)

    return LevyModel(
        tail_pos,
        tail_neg,
        support_radius=1.0,
        alpha=a,
        symmetric=False,
        density_pos=lambda m: m ** (-1.0 - a) if m <= 1.0 else 0.0,
        density_neg=lambda m: 0.0,
        tau_pos=lambda t: (np.asarray(t, dtype=float) / (a + np.asarray(t, dtype=float)))
        ** (1.0 / a),
        tau_neg=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        truncated_moment_side=moment,
    )
