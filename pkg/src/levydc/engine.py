"""Merged time grids, coupled driving noise, and the Euler stepping core.

A trajectory's randomness is prepared once on a fine dyadic grid of
``2^K`` intervals plus the trajectory's jump times, and every coarser
resolution consumes *aggregations* of the same atoms:

* Jump times and sizes are shared by all resolutions.
* Brownian motion is drawn as increments on the fine regular grid and then
  split at interior jump times with Brownian-bridge conditioning, yielding
  one canonical array of leaf increments on the union grid.  Increments at
  any resolution are segmented sums of that one array, computed by a single
  routine, so a coarse increment equals the sum of the benchmark-level
  increments it covers exactly (same atoms, same summation).
* The Gaussian small-jump substitute of scheme 2 discretizes a *second*
  Brownian motion (independent of the diffusion driver): the per-interval
  term is ``sigma_i(x) * dW_i / sqrt(dt_i)``, and W is prepared exactly
  like B, so coarse and fine paths share it.  Without this coupling the
  substitute noise of two resolutions is independent and its O(1) variance
  floods the discretization error being measured.  The uncoupled variant
  (independent draws keyed by (method, resolution)) remains available via
  ``small_jump_coupling="independent"``.

Two schemes run over the merged grid of regular and jump times: scheme 1
omits the removed small-jump region, scheme 2 adds a Gaussian with the
matched per-interval variance.  Retained jumps are applied at their arrival
point with left-endpoint coefficients; an optional mean correction keeps
retained jumps compensated for asymmetric measures (it is identically zero
for the symmetric worked example).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dynamic_cutting import (
    CutParams,
    JumpStream,
    sample_jump_stream,
    sample_union_stream,
)
from .fixed_cutting import ArParams, ar_sample_jumps
from .measures import NEG, POS, LevyModel
from .rng import (
    CH_AR_JUMPS,
    CH_BRIDGE_AR,
    CH_BRIDGE_DC,
    CH_BROWNIAN,
    CH_DC_JUMPS,
    CH_GAUSS_BRIDGE_AR,
    CH_GAUSS_BRIDGE_DC,
    CH_GAUSS_SUB,
    CH_SMALL_JUMP,
    METHOD_IDS,
    TrajectorySeeds,
)
from .sde import (
    CoefficientSet,
    large_jump_compensator,
    large_jump_mean_rate,
    sigma_small_sq,
)

DIVERGENCE_BOUND = 1e12


class PathDivergenceError(RuntimeError):
    """State left the admissible range; carries the offending step index."""

    def __init__(self, step: int, t: float, value: float) -> None:
        super().__init__(
            f"state diverged at step {step} (t={t:.6g}): X={value!r} "
            f"exceeds {DIVERGENCE_BOUND:g} or is non-finite"
        )
        self.step = step
        self.t = t


class CouplingError(ValueError):
    """Two paths that must share a trajectory's noise do not."""


# -- merged grid ---------------------------------------------------------------


@dataclass
class MergedGrid:
    """Sorted union of regular and jump times with per-point annotations.

    ``jump_sizes`` carries 0 at plain regular points; a regular point that
    coincides with a jump carries that jump (coincident events collapse to
    one point with summed size).
    """

    times: np.ndarray
    jump_sizes: np.ndarray
    is_jump: np.ndarray
    n_regular: int
    horizon: float

    def __len__(self) -> int:
        return int(self.times.size)

    def rho(self, t: float) -> int:
        """Number of grid points strictly before ``t``."""
        return int(np.searchsorted(self.times, t, side="left"))


def build_merged_grid(
    n: int,
    jumps: JumpStream,
    T: float,
    regular_times: Optional[np.ndarray] = None,
) -> MergedGrid:
    """Merge the ``n+1``-point regular grid with the jump times.

    ``regular_times`` overrides the default ``linspace`` so nested
    resolutions can share bit-identical regular points.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if regular_times is None:
        regular_times = np.linspace(0.0, T, n + 1)
    jt = jumps.times
    if jt.size and (jt[0] <= 0.0 or jt[-1] > T):
        raise ValueError("jump times must lie in (0, T]")
    idx = np.searchsorted(regular_times, jt)
    times = np.insert(regular_times, idx, jt)
    sizes = np.insert(np.zeros(regular_times.size), idx, jumps.sizes)
    isj = np.insert(np.zeros(regular_times.size, dtype=bool), idx, True)
    dup = np.nonzero(np.diff(times) == 0.0)[0]
    if dup.size:
        keep = np.ones(times.size, dtype=bool)
        keep[dup] = False
        for i in dup[::-1]:
            sizes[i + 1] += sizes[i]
            isj[i + 1] |= isj[i]
        times, sizes, isj = times[keep], sizes[keep], isj[keep]
    return MergedGrid(times, sizes, isj, n_regular=n, horizon=T)


# -- driving noise -------------------------------------------------------------


def _segment_sums(values: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Sums of ``values`` between consecutive ``bounds`` indices.

    This is the single aggregation routine behind every resolution's
    Brownian increments; the coupling identity is exact because coarse and
    fine queries reduce to the same call on the same atoms.
    """
    if bounds[-1] != values.size:
        raise ValueError("last bound must close the final segment")
    return np.add.reduceat(values, bounds[:-1])


@dataclass
class DrivingNoise:
    """All randomness of one trajectory, shared across resolutions.

    ``union_increments`` drives the diffusion term; ``sub_union_increments``
    is the independent second Brownian motion driving the Gaussian
    small-jump substitute.  Both live on the same union grid.
    """

    method: str
    benchmark_k: int
    horizon: float
    regular_times: np.ndarray
    union_times: np.ndarray
    union_increments: np.ndarray
    sub_union_increments: np.ndarray
    jumps: JumpStream
    seeds: TrajectorySeeds
    trajectory_key: tuple = field(default=None)

    def __post_init__(self) -> None:
        if self.trajectory_key is None:
            self.trajectory_key = (*self.seeds.key, self.method)

    def coarse_regular_times(self, n: int) -> np.ndarray:
        fine_n = 2**self.benchmark_k
        if n < 1 or fine_n % n != 0:
            raise ValueError(f"n={n} does not divide the benchmark resolution {fine_n}")
        return self.regular_times[:: fine_n // n]

    def _aggregate(self, atoms: np.ndarray, point_times: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.union_times, point_times)
        if not np.array_equal(self.union_times[idx], point_times):
            raise CouplingError("requested points are not part of this noise's grid")
        return _segment_sums(atoms, idx)

    def brownian_increments(self, point_times: np.ndarray) -> np.ndarray:
        """Diffusion-driver increments between consecutive ``point_times``,
        each a segmented sum of the canonical leaf increments."""
        return self._aggregate(self.union_increments, point_times)

    def substitute_increments(self, point_times: np.ndarray) -> np.ndarray:
        """Substitute-driver increments, aggregated the same way."""
        return self._aggregate(self.sub_union_increments, point_times)

    def small_jump_normals(self, resolution_k: int, count: int) -> np.ndarray:
        rng = self.seeds.generator(
            CH_SMALL_JUMP, METHOD_IDS[self.method], resolution_k
        )
        return rng.standard_normal(count)


def _bridge_split(
    regular: np.ndarray,
    raw_increments: np.ndarray,
    jump_times: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Split fine-grid increments at interior jump times.

    Conditional on a fine interval's total increment, interior points are
    filled in by Brownian-bridge sampling; the final piece of each interval
    is the remainder, so the pieces of an interval always re-sum to a value
    consistent with the split construction.  Draws are consumed in jump-time
    order.
    """
    pos = np.searchsorted(regular, jump_times)
    on_grid = regular[np.clip(pos, 0, regular.size - 1)] == jump_times
    interior = jump_times[~on_grid]
    if interior.size == 0:
        return regular.copy(), raw_increments.copy()

    union_times = np.insert(regular, np.searchsorted(regular, interior), interior)
    host = np.searchsorted(regular, interior, side="right") - 1
    counts = np.bincount(host, minlength=regular.size - 1)
    eta = rng.standard_normal(interior.size)

    n_fine = regular.size - 1
    out = np.empty(n_fine + interior.size)
    offsets = np.arange(n_fine) + np.concatenate([[0], np.cumsum(counts[:-1])])

    plain = counts == 0
    out[offsets[plain]] = raw_increments[plain]

    single = counts == 1
    if single.any():
        hosts1 = np.nonzero(single)[0]
        jump_idx = np.searchsorted(host, hosts1)
        s = interior[jump_idx]
        a = regular[hosts1]
        b = regular[hosts1 + 1]
        frac = (s - a) / (b - a)
        sd = np.sqrt((s - a) * (b - s) / (b - a))
        left = raw_increments[hosts1] * frac + sd * eta[jump_idx]
        out[offsets[hosts1]] = left
        out[offsets[hosts1] + 1] = raw_increments[hosts1] - left

    for h in np.nonzero(counts >= 2)[0]:
        j0 = np.searchsorted(host, h)
        points = interior[j0 : j0 + counts[h]]
        cur = regular[h]
        end = regular[h + 1]
        remainder = raw_increments[h]
        slot = offsets[h]
        for j, s in enumerate(points):
            length = end - cur
            mean = remainder * (s - cur) / length
            sd = np.sqrt((s - cur) * (end - s) / length)
            piece = mean + sd * eta[j0 + j]
            out[slot] = piece
            remainder -= piece
            cur = s
            slot += 1
        out[slot] = remainder

    return union_times, out


@dataclass
class SharedJumpField:
    """One trajectory's underlying jump realization, shared by both cutting
    methods.

    The field holds jumps above the pointwise minimum of the two methods'
    thresholds; each method's retained stream is the subset above its own
    threshold.  The subsets have exactly the per-method laws, and their
    overlap makes cross-method error comparisons common-random-number
    coupled.
    """

    cut_params: CutParams
    ar_params: ArParams
    jumps: JumpStream
    model: LevyModel

    def subset(self, method: str) -> JumpStream:
        js = self.jumps
        if method == "none":
            return JumpStream.empty()
        if method == "dc":
            keep = np.zeros(len(js), dtype=bool)
            for side in (POS, NEG):
                mask = js.sides == side
                if mask.any():
                    thresholds = _threshold_array(
                        self.cut_params, self.model, side, js.times[mask]
                    )
                    keep[mask] = np.abs(js.sizes[mask]) >= thresholds
        elif method == "ar":
            keep = np.abs(js.sizes) >= self.ar_params.threshold_eps
        else:
            raise ValueError(f"unknown method {method!r}")
        return JumpStream(
            js.times[keep], js.sizes[keep], js.sides[keep], js.generated_with
        )


def prepare_shared_field(
    seeds: TrajectorySeeds,
    cut_params: CutParams,
    ar_params: ArParams,
    model: LevyModel,
) -> SharedJumpField:
    """Sample the common jump field of one trajectory (channel of the
    dynamic-cut sampler)."""
    jumps = sample_union_stream(
        cut_params, ar_params.threshold_eps, model, seeds.generator(CH_DC_JUMPS)
    )
    return SharedJumpField(cut_params, ar_params, jumps, model)


def prepare_noise(
    seeds: TrajectorySeeds,
    benchmark_k: int,
    method: str,
    params,
    model: Optional[LevyModel],
    T: float,
    shared_field: Optional[SharedJumpField] = None,
) -> DrivingNoise:
    """Sample one trajectory's jump stream and canonical Brownian atoms.

    ``method`` selects the jump sampler: ``"dc"`` (time-dependent cut,
    ``params`` a :class:`CutParams`), ``"ar"`` (constant cut, ``params`` an
    :class:`ArParams`), or ``"none"`` (no jumps; for deterministic and
    diffusion-only runs).

    With ``shared_field``, the jump stream is the method's subset of the
    field's common realization, Brownian atoms are split at *all* field
    jump times, and the trajectory key is method-independent, so paths of
    different methods compare as one coupled trajectory.
    """
    if method not in METHOD_IDS:
        raise ValueError(f"unknown method {method!r}")
    if shared_field is not None:
        jumps = shared_field.subset(method)
        split_times = shared_field.jumps.times
        bridge_channel, sub_bridge_channel = CH_BRIDGE_DC, CH_GAUSS_BRIDGE_DC
        key = (*seeds.key, "shared")
    elif method == "dc":
        if not isinstance(params, CutParams):
            raise TypeError("method 'dc' needs CutParams")
        jumps = sample_jump_stream(params, model, seeds.generator(CH_DC_JUMPS))
        split_times = jumps.times
        bridge_channel, sub_bridge_channel = CH_BRIDGE_DC, CH_GAUSS_BRIDGE_DC
        key = None
    elif method == "ar":
        if not isinstance(params, ArParams):
            raise TypeError("method 'ar' needs ArParams")
        jumps = ar_sample_jumps(params, model, seeds.generator(CH_AR_JUMPS))
        split_times = jumps.times
        bridge_channel, sub_bridge_channel = CH_BRIDGE_AR, CH_GAUSS_BRIDGE_AR
        key = None
    else:
        jumps = JumpStream.empty()
        split_times = jumps.times
        bridge_channel, sub_bridge_channel = CH_BRIDGE_DC, CH_GAUSS_BRIDGE_DC
        key = None

    n_fine = 2**benchmark_k
    regular = np.linspace(0.0, T, n_fine + 1)
    step = T / n_fine
    raw = seeds.generator(CH_BROWNIAN).standard_normal(n_fine) * np.sqrt(step)
    union_times, union_increments = _bridge_split(
        regular, raw, split_times, seeds.generator(bridge_channel)
    )
    sub_raw = seeds.generator(CH_GAUSS_SUB).standard_normal(n_fine) * np.sqrt(step)
    _, sub_union_increments = _bridge_split(
        regular, sub_raw, split_times, seeds.generator(sub_bridge_channel)
    )
    return DrivingNoise(
        method=method,
        benchmark_k=benchmark_k,
        horizon=T,
        regular_times=regular,
        union_times=union_times,
        union_increments=union_increments,
        sub_union_increments=sub_union_increments,
        jumps=jumps,
        seeds=seeds,
        trajectory_key=key,
    )


# -- path records ---------------------------------------------------------------


@dataclass
class PathRecord:
    """One simulated path on its merged grid.

    Between grid points the path extends as a right-continuous step
    function holding the value of the *previous* grid point (the usual
    piecewise-constant extension of a jump path).  Holding the next point
    instead would make coupled sup-distances register every retained jump
    at its full size during the window before its arrival, flooring the
    error at the largest jump size; the previous-point convention keeps
    jump arrivals aligned across resolutions.
    """

    times: np.ndarray
    values: np.ndarray
    scheme: int
    method: str
    resolution: int
    trajectory_key: tuple

    def value_at(self, t) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        idx = np.maximum(idx, 0)
        out = self.values[idx]
        return float(out) if np.ndim(t) == 0 else out


# -- stepping -------------------------------------------------------------------


@dataclass
class _StepData:
    """Per-interval precomputed arrays for one resolution of one trajectory."""

    grid: MergedGrid
    t_left: np.ndarray
    dt: np.ndarray
    z: np.ndarray
    d_brownian: Optional[np.ndarray]
    small: Optional[np.ndarray]  # sqrt(unit variance) * zeta, per interval
    comp: Optional[np.ndarray]  # state-free compensator rate integral


def _threshold_array(params, model: LevyModel, side: int, s: np.ndarray) -> np.ndarray:
    out = np.zeros(s.size)
    if isinstance(params, ArParams):
        out[:] = params.threshold_eps
        return out
    levels = params.cut_level(np.maximum(s, 0.0))
    mask = levels > 0.0
    if mask.any():
        out[mask] = model.tau(side, levels[mask])
    return out


def _small_rate(params, model: LevyModel, t_left: np.ndarray) -> np.ndarray:
    """Removed-region variance rate at the intervals' left endpoints."""
    total = np.zeros(t_left.size)
    for side in (POS, NEG):
        r = _threshold_array(params, model, side, t_left)
        total += model.truncated_abs_moment_side(side, 2.0, r)
    return total


def _prepare_steps(
    scheme: int,
    coeffs: CoefficientSet,
    model: LevyModel,
    params,
    noise: DrivingNoise,
    n: int,
    sigma_mode: str,
    compensate: bool,
    coupling: str,
) -> _StepData:
    grid = build_merged_grid(
        n, noise.jumps, noise.horizon, regular_times=noise.coarse_regular_times(n)
    )
    t_left = grid.times[:-1]
    dt = np.diff(grid.times)
    z = grid.jump_sizes[1:]

    d_brownian = (
        noise.brownian_increments(grid.times) if coeffs.diffusion is not None else None
    )

    small = None
    if scheme == 2 and sigma_mode != "disabled" and params is not None:
        # Interval variance = rate(eval point) * dt.  The midpoint rate is
        # the default: the printed left-endpoint approximation zeroes the
        # variance of the interval starting at t=0 (the dynamic threshold
        # vanishes there), which pollutes coupled error measurements.
        eval_at = t_left if sigma_mode == "left-endpoint" else t_left + 0.5 * dt
        rate = _small_rate(params, model, eval_at)
        if coupling == "shared-brownian":
            # sigma_i(x) * dW_i / sqrt(dt_i): the state-free part reduces
            # to sqrt(rate) * dW_i.
            small = np.sqrt(rate) * noise.substitute_increments(grid.times)
        else:
            k = int(round(np.log2(n)))
            zeta = noise.small_jump_normals(k, t_left.size)
            small = np.sqrt(rate * dt) * zeta

    comp = None
    if compensate and not coeffs.symmetric_compensation and params is not None:
        comp = np.array(
            [
                large_jump_mean_rate(coeffs, model, params, s) * d
                for s, d in zip(t_left, dt)
            ]
        )
    return _StepData(grid, t_left, dt, z, d_brownian, small, comp)


def _run_factorized(
    coeffs: CoefficientSet,
    steps: list[_StepData],
    x0: float,
) -> np.ndarray:
    """Vectorized stepping across a batch; requires the multiplicative jump
    structure ``c(t,x,z) = jump_factor(t,x) * z``.

    Trajectories are padded with zero-length steps, which are exact no-ops.
    Returns values of shape ``(batch, max_points)``.
    """
    batch = len(steps)
    m_max = max(s.dt.size for s in steps)

    def padded(attr: str, fill: float = 0.0) -> Optional[np.ndarray]:
        cols = [getattr(s, attr) for s in steps]
        if any(c is None for c in cols):
            return None
        out = np.full((batch, m_max), fill)
        for i, c in enumerate(cols):
            out[i, : c.size] = c
        return out

    t_left = padded("t_left")
    for i, s in enumerate(steps):
        t_left[i, s.dt.size :] = s.grid.horizon
    dt = padded("dt")
    z = padded("z")
    db = padded("d_brownian")
    small = padded("small")
    comp = padded("comp")

    drift = coeffs.drift
    diffusion = coeffs.diffusion
    factor = coeffs.jump_factor

    x = np.full(batch, float(x0))
    values = np.empty((batch, m_max + 1))
    values[:, 0] = x
    for i in range(m_max):
        t = t_left[:, i]
        inc = drift(t, x) * dt[:, i]
        if db is not None:
            inc = inc + diffusion(t, x) * db[:, i]
        g = factor(t, x)
        inc = inc + g * z[:, i]
        if small is not None:
            inc = inc + np.abs(g) * small[:, i]
        if comp is not None:
            inc = inc - g * comp[:, i]
        x = x + inc
        values[:, i + 1] = x
    return values


def first_divergent_step(values: np.ndarray) -> Optional[int]:
    """Index of the first non-finite or out-of-range entry, or None."""
    bad = ~np.isfinite(values) | (np.abs(values) > DIVERGENCE_BOUND)
    if not bad.any():
        return None
    return int(np.argmax(bad))


def simulate_path(
    scheme: int,
    method: str,
    coeffs: CoefficientSet,
    model: LevyModel,
    params,
    noise: DrivingNoise,
    n: int,
    *,
    x0: float = 0.0,
    sigma_mode: str = "auto",
    compensate: bool = True,
    small_jump_coupling: str = "shared-brownian",
) -> PathRecord:
    """Run one Euler path at resolution ``n`` over the merged grid.

    Scheme 2 adds the Gaussian small-jump substitute; scheme 1 omits it and
    is otherwise identical.  ``sigma_mode`` is ``"auto"``/``"closed-form"``
    (left-endpoint variance), ``"quadrature"``, or ``"disabled"``
    (diagnostic: scheme 2 with zero substitute, bit-equal to scheme 1).
    ``small_jump_coupling`` selects the substitute driver: the shared
    second Brownian motion (default) or per-resolution independent draws.
    """
    records = simulate_batch(
        scheme,
        method,
        coeffs,
        model,
        params,
        [noise],
        n,
        x0=x0,
        sigma_mode=sigma_mode,
        compensate=compensate,
        small_jump_coupling=small_jump_coupling,
    )
    return records[0]


def simulate_batch(
    scheme: int,
    method: str,
    coeffs: CoefficientSet,
    model: LevyModel,
    params,
    noises: list[DrivingNoise],
    n: int,
    *,
    x0: float = 0.0,
    sigma_mode: str = "auto",
    compensate: bool = True,
    small_jump_coupling: str = "shared-brownian",
    raise_on_divergence: bool = True,
) -> list[PathRecord]:
    """Run a batch of trajectories at one resolution.

    All trajectories share the configuration; each consumes its own noise.
    With ``raise_on_divergence=False``, diverged paths are returned with
    non-finite tails instead of raising (the caller screens them).
    """
    if scheme not in (1, 2):
        raise ValueError("scheme must be 1 or 2")
    if small_jump_coupling not in ("shared-brownian", "independent"):
        raise ValueError(f"unknown small_jump_coupling {small_jump_coupling!r}")
    for noise in noises:
        if noise.method != method:
            raise CouplingError(
                f"noise prepared for method {noise.method!r}, asked for {method!r}"
            )
    if sigma_mode == "auto":
        sigma_mode = (
            "closed-form"
            if coeffs.c_squared_nu_closed_form is not None or coeffs.jump_factor
            else "quadrature"
        )
    if sigma_mode not in ("closed-form", "left-endpoint", "quadrature", "disabled"):
        raise ValueError(f"unknown sigma_mode {sigma_mode!r}")
    use_generic = coeffs.jump_factor is None or (
        scheme == 2 and sigma_mode == "quadrature"
    )
    if use_generic:
        return _simulate_batch_generic(
            scheme,
            method,
            coeffs,
            model,
            params,
            noises,
            n,
            x0,
            sigma_mode,
            compensate,
            small_jump_coupling,
        )

    steps = [
        _prepare_steps(
            scheme,
            coeffs,
            model,
            params,
            noise,
            n,
            sigma_mode,
            compensate,
            small_jump_coupling,
        )
        for noise in noises
    ]
    values = _run_factorized(coeffs, steps, x0)
    records = []
    for i, (noise, step) in enumerate(zip(noises, steps)):
        m = step.dt.size
        vals = values[i, : m + 1].copy()
        bad = first_divergent_step(vals)
        if bad is not None and raise_on_divergence:
            raise PathDivergenceError(bad, step.grid.times[bad], vals[bad])
        records.append(
            PathRecord(
                step.grid.times, vals, scheme, method, n, noise.trajectory_key
            )
        )
    return records


def _simulate_batch_generic(
    scheme,
    method,
    coeffs,
    model,
    params,
    noises,
    n,
    x0,
    sigma_mode,
    compensate,
    coupling,
) -> list[PathRecord]:
    records = []
    for noise in noises:
        grid = build_merged_grid(
            n, noise.jumps, noise.horizon, regular_times=noise.coarse_regular_times(n)
        )
        d_brownian = (
            noise.brownian_increments(grid.times)
            if coeffs.diffusion is not None
            else None
        )
        small_noise = None
        if scheme == 2 and sigma_mode != "disabled":
            if coupling == "shared-brownian":
                dt = np.diff(grid.times)
                small_noise = noise.substitute_increments(grid.times) / np.sqrt(dt)
            else:
                small_noise = noise.small_jump_normals(
                    int(round(np.log2(n))), len(grid) - 1
                )
        values = np.empty(len(grid))
        x = float(x0)
        values[0] = x
        for i in range(len(grid) - 1):
            t0, t1 = grid.times[i], grid.times[i + 1]
            inc = float(coeffs.drift(t0, x)) * (t1 - t0)
            if d_brownian is not None:
                inc += float(coeffs.diffusion(t0, x)) * d_brownian[i]
            if grid.is_jump[i + 1]:
                inc += float(coeffs.jump(t0, x, grid.jump_sizes[i + 1]))
            if small_noise is not None:
                # The generic path evaluates the op's interval variance;
                # its closed form is the left-endpoint convention.
                op_mode = "quadrature" if sigma_mode == "quadrature" else "closed-form"
                var = sigma_small_sq(coeffs, model, params, x, t0, t1, mode=op_mode)
                inc += np.sqrt(var) * small_noise[i]
            if compensate and not coeffs.symmetric_compensation:
                inc -= large_jump_compensator(coeffs, model, params, x, t0, t1)
            x += inc
            if not np.isfinite(x) or abs(x) > DIVERGENCE_BOUND:
                raise PathDivergenceError(i + 1, t1, x)
            values[i + 1] = x
        records.append(
            PathRecord(grid.times, values, scheme, method, n, noise.trajectory_key)
        )
    return records
