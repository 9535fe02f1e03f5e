"""Command-line entry point: simulate, validate, compare, convergence.

Every run writes a manifest before its results (resolved configuration,
master seed, planned artifacts) and finalizes it afterwards with wall-clock
time and SHA-256 digests of the artifacts.  Identical configuration and
seed reproduce identical result digests regardless of ``jobs``.

Exit codes: 0 success, 1 check or assertion failure, 2 configuration error.
The ``LEVY_DC_SEED`` environment variable overrides the master seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load
from .dynamic_cutting import CutParams
from .engine import prepare_noise, simulate_path
from .fixed_cutting import ArParams
from .harness import (
    ExperimentConfig,
    fit_convergence_order,
    rate_hint,
    resolve_h,
    run_comparison,
)
from .measures import TruncatedStableModel
from .rng import TrajectorySeeds
from .sde import make_sin_cos_example
from .svg import Chart, Series, render
from .validation import run_validation


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Manifest:
    def __init__(self, out_dir: Path, command: str, cfg: RunConfig, seed: int) -> None:
        self.path = out_dir / "manifest.json"
        self.started = time.monotonic()
        self.data = {
            "command": command,
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "config": cfg.snapshot(),
            "master_seed": seed,
            "versions": {
                "levydc": __version__,
                "numpy": np.__version__,
                "python": sys.version.split()[0],
            },
            "artifacts": [],
            "result_digests": {},
            "wall_clock_seconds": None,
        }

    def plan(self, paths) -> None:
        self.data["artifacts"] = [str(p) for p in paths]
        self.write()

    def write(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(
            json.dumps(self.data, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def finalize(self) -> None:
        self.data["wall_clock_seconds"] = round(time.monotonic() - self.started, 3)
        self.data["result_digests"] = {
            p: _sha256(Path(p)) for p in self.data["artifacts"] if Path(p).exists()
        }
        self.write()


def _write_csv(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(",".join(row) + "\n")


def _resolve_seed(cfg: RunConfig) -> int:
    env = os.environ.get("LEVY_DC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"LEVY_DC_SEED must be an integer, got {env!r}") from exc
    return cfg.get_int("seed")


def _model_from(cfg: RunConfig):
    kind = cfg.get_str("levy.kind", choices=("truncated-stable",))
    alpha = cfg.get_float("levy.alpha")
    if not 0.0 < alpha < 2.0:
        raise ConfigError(f"levy.alpha must lie in (0, 2), got {alpha}")
    del kind  # single kind for now; key kept for forward compatibility
    return TruncatedStableModel(alpha)


def _coeffs_from(cfg: RunConfig, model):
    cfg.get_str("sde.example", choices=("sin-cos",))
    return make_sin_cos_example(model)


def _params_from(cfg: RunConfig, model, method: str, n_for_h: int):
    T = cfg.get_float("cut.T")
    if method == "ar":
        return ArParams(cfg.get_float("ar.threshold_eps"), T)
    if method == "none":
        return None
    eps = cfg.get_float("cut.epsilon")
    mode = cfg.get_str("cut.h_mode", choices=("match-ar-variance", "n-power", "fixed"))
    if mode == "fixed":
        h = cfg.get_float("cut.h", required=False)
        if h is None or h <= 0.0:
            raise ConfigError("cut.h_mode=fixed requires a positive cut.h")
    elif mode == "n-power":
        h = float(n_for_h) ** (-1.0 / eps)
    else:
        from .harness import h_for_variance_match

        h = h_for_variance_match(
            model, _coeffs_from(cfg, model), eps, cfg.get_float("ar.threshold_eps"), T
        )
    return CutParams(eps, h, T)


def cmd_simulate(cfg: RunConfig, out_dir: Path) -> int:
    seed = _resolve_seed(cfg)
    model = _model_from(cfg)
    coeffs = _coeffs_from(cfg, model)
    n = cfg.get_int("simulate.n")
    k = int(round(math.log2(n)))
    if 2**k != n:
        raise ConfigError(f"simulate.n must be a power of two, got {n}")
    method = cfg.get_str("method", choices=("dc", "ar", "none"))
    scheme = cfg.get_int("scheme")
    if scheme not in (1, 2):
        raise ConfigError(f"scheme must be 1 or 2, got {scheme}")
    params = _params_from(cfg, model, method, n)
    n_traj = cfg.get_int("simulate.trajectories")
    sigma_mode = cfg.get_str(
        "sde.sigma_mode", choices=("closed-form", "quadrature", "disabled")
    )
    compensate = cfg.get_bool("sde.compensate_large_jumps")
    coupling = cfg.get_str(
        "sde.small_jump_coupling", choices=("shared-brownian", "independent")
    )
    x0 = cfg.get_float("sde.x0")
    T = cfg.get_float("cut.T")

    manifest = Manifest(out_dir, "simulate", cfg, seed)
    paths = [out_dir / f"path_{i:03d}.csv" for i in range(n_traj)]
    manifest.plan(paths)
    for i, path in enumerate(paths):
        noise = prepare_noise(TrajectorySeeds(seed, 0, i), k, method, params, model, T)
        record = simulate_path(
            scheme,
            method,
            coeffs,
            model,
            params,
            noise,
            n,
            x0=x0,
            sigma_mode=sigma_mode,
            compensate=compensate,
            small_jump_coupling=coupling,
        )
        rows = [["t", "x"]] + [
            [f"{t:.12g}", f"{x:.12g}"] for t, x in zip(record.times, record.values)
        ]
        _write_csv(path, rows)
    manifest.finalize()
    print(f"wrote {n_traj} path file(s) under {out_dir}")
    return 0


def cmd_validate(cfg: RunConfig, out_dir: Path) -> int:
    seed = _resolve_seed(cfg)
    cfg.values["seed"] = str(seed)
    manifest = Manifest(out_dir, "validate", cfg, seed)
    report_path = out_dir / "validation.txt"
    manifest.plan([report_path])
    results = run_validation(cfg)
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        lines.append(f"{status} {res.name}: {res.detail}")
        print(lines[-1])
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest.finalize()
    return 0 if all(r.passed for r in results) else 1


def _experiment_config(cfg: RunConfig, seed: int) -> ExperimentConfig:
    alphas = cfg.get_float_list("compare.alphas", required=False)
    if alphas is None:
        alphas = (cfg.get_float("levy.alpha"),)
    methods = tuple(cfg.get_str("methods").split(","))
    h_mode = cfg.get_str("cut.h_mode", choices=("match-ar-variance", "n-power", "fixed"))
    sigma_mode = cfg.get_str(
        "sde.sigma_mode", choices=("closed-form", "quadrature", "disabled")
    )
    exp = ExperimentConfig(
        alphas=alphas,
        scheme=cfg.get_int("scheme"),
        methods=methods,
        eps_dc=cfg.get_float("cut.epsilon"),
        eps_ar=cfg.get_float("ar.threshold_eps"),
        h_mode=h_mode,
        h_fixed=cfg.get_float("cut.h", required=False),
        benchmark_k=cfg.get_int("grid.benchmark_k"),
        coarse_ks=cfg.get_int_list("grid.coarse_ks"),
        p_values=cfg.get_float_list("mc.p_values"),
        loops=cfg.get_int("mc.loops"),
        trajectories=cfg.get_int("mc.trajectories"),
        master_seed=seed,
        horizon=cfg.get_float("cut.T"),
        x0=cfg.get_float("sde.x0"),
        sigma_mode=sigma_mode,
        compensate=cfg.get_bool("sde.compensate_large_jumps"),
        small_jump_coupling=cfg.get_str(
            "sde.small_jump_coupling", choices=("shared-brownian", "independent")
        ),
        jobs=cfg.get_int("jobs"),
    )
    try:
        exp.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return exp


def _error_plot(result, alpha: float) -> str:
    chart = Chart(
        title=f"strong L^p errors, alpha={alpha:g}",
        x_label="log2 n",
        y_label="log10 error",
    )
    cfg = result.config
    for p in cfg.p_values:
        for method in cfg.methods:
            xs, ys = [], []
            for k in cfg.coarse_ks:
                cell = result.table.rows[(alpha, method, cfg.scheme, k, p)]
                if cell.error > 0.0:
                    xs.append(float(k))
                    ys.append(math.log10(cell.error))
            if xs:
                chart.series.append(
                    Series(xs, ys, f"{method} p={p:g}", dashed=(method == "ar"))
                )
    return render(chart)


def cmd_compare(cfg: RunConfig, out_dir: Path) -> int:
    seed = _resolve_seed(cfg)
    exp = _experiment_config(cfg, seed)
    manifest = Manifest(out_dir, "compare", cfg, seed)
    err_path = out_dir / "errors.csv"
    artifacts = [err_path]
    diff_path = out_dir / "ar_minus_dc.csv"
    if len(exp.methods) == 2:
        artifacts.append(diff_path)
    svg_paths = {
        alpha: out_dir / f"strong_errors_alpha{alpha:g}.svg" for alpha in exp.alphas
    }
    artifacts.extend(svg_paths.values())
    manifest.plan(artifacts)

    result = run_comparison(exp)
    _write_csv(err_path, result.table.csv_rows())
    if len(exp.methods) == 2:
        _write_csv(diff_path, result.difference_csv_rows())
    for alpha, path in svg_paths.items():
        path.write_text(_error_plot(result, alpha), encoding="utf-8")
    manifest.finalize()
    invalid = [
        key for key, cell in result.table.rows.items() if not cell.valid
    ]
    for key in invalid:
        print(f"warning: cell {key} excluded more than 1% of trajectories")
    print(f"wrote {', '.join(str(a) for a in artifacts)}")
    return 0


def cmd_convergence(cfg: RunConfig, out_dir: Path, self_test: bool) -> int:
    seed = _resolve_seed(cfg)
    manifest = Manifest(out_dir, "convergence", cfg, seed)
    slope_path = out_dir / "slopes.csv"
    manifest.plan([slope_path])

    rows = [["alpha", "method", "scheme", "p", "slope", "ci_low", "ci_high", "rate_hint"]]
    if self_test:
        ns = np.array([2**k for k in (6, 7, 8, 9)], dtype=float)
        errors = np.tile(3.0 * ns**-0.5, (8, 1))
        fit = fit_convergence_order(ns, errors)
        rows.append(
            [
                "synthetic",
                "self-test",
                "-",
                "-",
                f"{fit.slope:.6g}",
                f"{fit.ci_low:.6g}",
                f"{fit.ci_high:.6g}",
                "-0.5",
            ]
        )
        print(f"self-test slope {fit.slope:.4f} (target -0.5)")
    else:
        exp = _experiment_config(cfg, seed)
        if len(exp.coarse_ks) < 3:
            raise ConfigError("convergence needs at least 3 coarse resolutions")
        result = run_comparison(exp)
        ns = np.array([2.0**k for k in exp.coarse_ks])
        for alpha in exp.alphas:
            for method in exp.methods:
                for p in exp.p_values:
                    loop_errs = np.column_stack(
                        [
                            result.loop_estimates[(alpha, method, k, p)]
                            for k in exp.coarse_ks
                        ]
                    )
                    fit = fit_convergence_order(ns, loop_errs)
                    rows.append(
                        [
                            f"{alpha:g}",
                            method,
                            str(exp.scheme),
                            f"{p:g}",
                            f"{fit.slope:.6g}",
                            f"{fit.ci_low:.6g}",
                            f"{fit.ci_high:.6g}",
                            f"{-rate_hint(exp.scheme, alpha, p):.6g}",
                        ]
                    )
    _write_csv(slope_path, rows)
    manifest.finalize()
    print(f"wrote {slope_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levydc",
        description="Euler schemes for Levy-driven SDEs with cut jump measures",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )
        p.add_argument("--alpha", type=float, help="shorthand for levy.alpha")
        p.add_argument("--seed", type=int, help="shorthand for seed")
        p.add_argument("--out", help="shorthand for out.dir")
        p.add_argument("--jobs", type=int, help="shorthand for jobs")

    p_sim = sub.add_parser("simulate", help="write sampled trajectory CSVs")
    common(p_sim)
    p_sim.add_argument("--scheme", type=int, help="shorthand for scheme")
    p_sim.add_argument("--n", type=int, help="shorthand for simulate.n")
    p_sim.add_argument("--method", help="shorthand for method (dc|ar|none)")
    p_sim.add_argument(
        "--trajectories", type=int, help="shorthand for simulate.trajectories"
    )

    p_val = sub.add_parser("validate", help="run the statistical check battery")
    common(p_val)

    p_cmp = sub.add_parser("compare", help="coupled error comparison across methods")
    common(p_cmp)

    p_cnv = sub.add_parser("convergence", help="fit empirical convergence orders")
    common(p_cnv)
    p_cnv.add_argument(
        "--self-test",
        action="store_true",
        help="fit a synthetic exact power law instead of running simulations",
    )
    return parser


def _collect_overrides(args) -> list:
    overrides = list(args.overrides or [])
    mapping = {
        "alpha": "levy.alpha",
        "seed": "seed",
        "out": "out.dir",
        "jobs": "jobs",
        "scheme": "scheme",
        "n": "simulate.n",
        "method": "method",
        "trajectories": "simulate.trajectories",
    }
    for attr, key in mapping.items():
        val = getattr(args, attr, None)
        if val is not None:
            overrides.append(f"{key}={val}")
    return overrides


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load(args.config, _collect_overrides(args))
        out_dir = Path(cfg.get_str("out.dir"))
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir)
        if args.command == "validate":
            return cmd_validate(cfg, out_dir)
        if args.command == "compare":
            return cmd_compare(cfg, out_dir)
        if args.command == "convergence":
            return cmd_convergence(cfg, out_dir, args.self_test)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
