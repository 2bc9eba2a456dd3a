# relgof/cli.py

"""Command-line experiment runner: `python -m relgof <subcommand>`."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from relgof import config as app_config
from relgof.harness.bench import runtime_bench
from relgof.harness.curves import criterion_curve, greedy_report, pool_score_report
from relgof.harness.matrix_io import load_matrix, save_results, write_curve_csv
from relgof.harness.trials import METHODS, run_trials
from relgof.schemas import CurveRow, ProblemConfig, TrialsGridReport
from relgof.stats.errors import InputError, RelGofError

logger = logging.getLogger(__name__)

PROBLEMS = ("mean_shift", "blobs", "rbm", "mixture1d", "external")

# Flags copied from the command line into ProblemConfig when given.
PROBLEM_FLAGS = ("problem", "d", "d_h", "mix_left", "seed_problem", "x_path", "y_path", "z_path")


def _read_config_file(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"config file {path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"config file {path} must hold a JSON object")
    return data


def problem_config(args, n: Optional[int] = None, epsilon: Optional[float] = None) -> ProblemConfig:
    """File values first, then command-line flags."""
    data = _read_config_file(args.config)
    for flag in PROBLEM_FLAGS:
        value = getattr(args, flag, None)
        if value is not None:
            data[flag] = value
    if n is not None:
        data["n"] = n
    if epsilon is not None:
        data["epsilon"] = epsilon
    return ProblemConfig.model_validate(data)


def _csv_path(out: Path) -> Path:
    return out.with_suffix(".csv")


def cmd_trials(args) -> None:
    n_values = args.n or [None]
    eps_values = args.epsilon or [None]
    # the swept quantity is the figure's x axis
    by_epsilon = len(eps_values) > 1
    runs = []
    rows: List[CurveRow] = []
    for n in n_values:
        for eps in eps_values:
            config = problem_config(args, n, eps)
            for method in args.method:
                for J in args.J:
                    report = run_trials(
                        config,
                        method,
                        J=J,
                        alpha=args.alpha,
                        trials=args.trials,
                        seed_base=args.seed,
                        train_frac=args.train_frac,
                    )
                    runs.append(report)
                    s = report.summary
                    rows.append(
                        CurveRow(
                            x=eps if by_epsilon else config.n,
                            method=method if len(args.J) == 1 else f"{method}_J{J}",
                            value=s.rejection_rate,
                            ci_low=s.ci_low,
                            ci_high=s.ci_high,
                        )
                    )
                    print(f"{config.problem} n={config.n} eps={eps} {method} J={J}: "
                          f"{s.rejection_rate:.3f} [{s.ci_low:.3f}, {s.ci_high:.3f}] failures={s.failures}")
    save_results(args.out, TrialsGridReport(runs=runs))
    write_curve_csv(_csv_path(args.out), rows)


def cmd_bench(args) -> None:
    if not args.n:
        raise InputError("bench needs an n grid (--n 1000 2000 4000)")
    config = problem_config(args, args.n[0], args.epsilon[0] if args.epsilon else None)
    report = runtime_bench(
        config,
        args.method,
        args.n,
        reps=args.reps,
        J=args.J[0],
        alpha=args.alpha,
        seed_base=args.seed,
        train_frac=args.train_frac,
    )
    rows = [
        CurveRow(x=r.n, method=r.method, value=r.median_seconds, ci_low=r.min_seconds, ci_high=r.max_seconds)
        for r in report.rows
    ]
    for method, slope in report.slopes.items():
        print(f"{method}: log-log slope {slope:.3f}")
    save_results(args.out, report)
    write_curve_csv(_csv_path(args.out), rows)


def cmd_criterion_curve(args) -> None:
    n = args.n[0] if args.n else 20000
    config = problem_config(args, n)
    grid = np.linspace(args.grid_min, args.grid_max, args.grid_points)
    rows = criterion_curve(config, grid, sigma2=args.sigma2 or 1.0, gamma=args.gamma, seed=args.seed)
    write_curve_csv(_csv_path(args.out), rows)


def _locations_common(args):
    n = args.n[0] if args.n else None
    config = problem_config(args, n, args.epsilon[0] if args.epsilon else None)
    pool = load_matrix(args.pool) if args.pool else None
    return config, pool


def _print_locations(report) -> None:
    for idx, loc, value in zip(report.indices, report.locations, report.values):
        print(f"row {idx}: criterion {value:.4g} at {np.array2string(np.asarray(loc), precision=3)}")
    verdict = "rejects" if report.test.reject else "does not reject"
    print(f"held-out test {verdict} H0 (stat={report.test.stat:.4g}, p={report.test.p_value:.4g})")


def cmd_pool_score(args) -> None:
    config, pool = _locations_common(args)
    report = pool_score_report(
        config,
        kind=args.criterion,
        pool=pool,
        J=args.J[0],
        pool_size=args.pool_size,
        sigma2=args.sigma2,
        gamma=args.gamma,
        alpha=args.alpha,
        seed=args.seed,
        train_frac=args.train_frac,
    )
    _print_locations(report)
    save_results(args.out, report)


def cmd_greedy(args) -> None:
    config, pool = _locations_common(args)
    report = greedy_report(
        config,
        kind=args.criterion,
        pool=pool,
        J=args.J[0],
        direction=args.direction,
        require_improvement=args.require_improvement,
        pool_size=args.pool_size,
        sigma2=args.sigma2,
        gamma=args.gamma,
        alpha=args.alpha,
        seed=args.seed,
        train_frac=args.train_frac,
    )
    _print_locations(report)
    save_results(args.out, report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relgof", description="Relative goodness-of-fit tests.")
    parser.add_argument("--log-level", default=app_config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", choices=PROBLEMS)
    common.add_argument("--config", help="JSON file with ProblemConfig fields; flags override it")
    common.add_argument("--n", type=int, nargs="+")
    common.add_argument("--d", type=int)
    common.add_argument("--d-h", dest="d_h", type=int)
    common.add_argument("--epsilon", type=float, nargs="+")
    common.add_argument("--mix-left", dest="mix_left", type=float)
    common.add_argument("--seed-problem", dest="seed_problem", type=int)
    common.add_argument("--x-path", dest="x_path")
    common.add_argument("--y-path", dest="y_path")
    common.add_argument("--z-path", dest="z_path")
    common.add_argument("--J", type=int, nargs="+", default=[5])
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--train-frac", dest="train_frac", type=float, default=0.2)

    p = sub.add_parser("trials", parents=[common], help="rejection rates over repeated trials")
    p.add_argument("--method", nargs="+", choices=METHODS, default=["rel_ume_opt"])
    p.add_argument("--trials", type=int, default=300)
    p.add_argument("--out", type=Path, default=Path("results/trials.json"))
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("bench", parents=[common], help="wall time against sample size")
    p.add_argument("--method", nargs="+", choices=METHODS, default=["rel_ume_opt", "rel_mmd_median"])
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", type=Path, default=Path("results/bench.json"))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("criterion-curve", parents=[common], help="criteria and witnesses over a 1-d grid")
    p.add_argument("--grid-min", dest="grid_min", type=float, default=-6.0)
    p.add_argument("--grid-max", dest="grid_max", type=float, default=6.0)
    p.add_argument("--grid-points", dest="grid_points", type=int, default=200)
    p.add_argument("--sigma2", type=float)
    p.add_argument("--gamma", type=float, default=1e-4)
    p.add_argument("--out", type=Path, default=Path("results/criterion_curve.csv"))
    p.set_defaults(func=cmd_criterion_curve, problem_default="mixture1d")

    for name, func, help_text in (
        ("pool-score", cmd_pool_score, "score every candidate location in a pool"),
        ("greedy", cmd_greedy, "greedy selection of locations from a pool"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--criterion", choices=("ume", "fssd"), default="ume")
        p.add_argument("--pool", help="matrix file (.npy or .csv) of candidate locations")
        p.add_argument("--pool-size", dest="pool_size", type=int, default=200)
        p.add_argument("--sigma2", type=float)
        p.add_argument("--gamma", type=float, default=1e-4)
        p.add_argument("--out", type=Path, default=Path(f"results/{name.replace('-', '_')}.json"))
        if name == "greedy":
            p.add_argument("--direction", choices=("maximize", "minimize"), default="maximize")
            p.add_argument(
                "--allow-decrease",
                dest="require_improvement",
                action="store_false",
                help="always pick J rows, even when the set criterion gets worse",
            )
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    app_config.configure_logging(args.log_level.upper())
    if args.problem is None and getattr(args, "problem_default", None) and args.config is None:
        args.problem = args.problem_default
    try:
        args.func(args)
    except (RelGofError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return 1
    return 0
