# relgof/harness/bench.py

"""Wall-time scaling of the tests with the sample size."""

import logging
import time
from typing import Dict, List, Sequence

import numpy as np

from relgof.harness.problems import build_problem
from relgof.harness.trials import check_method, run_method, trial_seed
from relgof.schemas import BenchReport, BenchRow, ProblemConfig
from relgof.stats.errors import InputError
from relgof.stats.util import ContextTimer

logger = logging.getLogger(__name__)

# Medians shorter than this many clock ticks are re-measured with more reps.
MIN_TICKS = 1000
MAX_REP_DOUBLINGS = 4


def fit_loglog_slope(n_grid: Sequence[int], seconds: Sequence[float]) -> float:
    """Least-squares slope of log(seconds) against log(n)."""
    slope, _ = np.polyfit(np.log(np.asarray(n_grid, dtype=float)), np.log(np.asarray(seconds, dtype=float)), 1)
    return float(slope)


def runtime_bench(
    config: ProblemConfig,
    methods: Sequence[str],
    n_grid: Sequence[int],
    reps: int = 3,
    J: int = 5,
    alpha: float = 0.05,
    seed_base: int = 0,
    train_frac: float = 0.2,
) -> BenchReport:
    if reps < 3:
        raise InputError(f"reps must be at least 3, got {reps}")
    if len(n_grid) < 2 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise InputError(f"n_grid must be strictly increasing with at least two entries, got {list(n_grid)}")
    problem = build_problem(config)
    for method in methods:
        check_method(method, problem)
    resolution = time.get_clock_info("perf_counter").resolution

    rows: List[BenchRow] = []
    slopes: Dict[str, float] = {}
    for method in methods:
        medians = []
        for n in n_grid:
            count = reps
            note = None
            for doubling in range(MAX_REP_DOUBLINGS + 1):
                times = []
                for rep in range(count):
                    data_seq, method_seq = trial_seed(seed_base, rep).spawn(2)
                    X, Y, Z = problem.sample_triple(n, data_seq)
                    # data generation is outside the timed region
                    with ContextTimer() as t:
                        run_method(method, problem, X, Y, Z, J, alpha, train_frac, method_seq)
                    times.append(t.secs)
                median = float(np.median(times))
                if median >= MIN_TICKS * resolution or doubling == MAX_REP_DOUBLINGS:
                    break
                count *= 2
                note = f"reps raised to {count} for timer resolution"
            if note:
                logger.info(f"{method} at n={n}: {note}")
            logger.info(f"{method} at n={n}: median {median:.4g}s over {len(times)} reps")
            medians.append(median)
            rows.append(
                BenchRow(
                    method=method,
                    n=n,
                    reps=len(times),
                    median_seconds=median,
                    min_seconds=float(np.min(times)),
                    max_seconds=float(np.max(times)),
                    note=note,
                )
            )
        slopes[method] = fit_loglog_slope(n_grid, medians)
        logger.info(f"{method}: log-log slope {slopes[method]:.3f}")
    return BenchReport(config=config, rows=rows, slopes=slopes)
