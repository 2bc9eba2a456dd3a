# relgof/harness/trials.py

"""Monte-Carlo trial loops: rejection rates of the relative tests."""

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Optional, Tuple

import numpy as np
from scipy import stats

from relgof import config as app_config
from relgof.harness.problems import Problem, build_problem
from relgof.schemas import (
    MethodName,
    OptimConfig,
    ProblemConfig,
    RunSummary,
    TestResult,
    TrialRecord,
    TrialsReport,
    finite_or_none,
)
from relgof.stats.errors import InputError
from relgof.stats.fssd import rel_fssd_test
from relgof.stats.kernels import KernelSpec, init_bandwidth, median_heuristic
from relgof.stats.mmd import rel_mmd_test
from relgof.stats.tuning import (
    optimize_fssd_params,
    optimize_ume_params,
    split_train_test,
)
from relgof.stats.ume import rel_ume_test
from relgof.stats.util import ContextTimer

logger = logging.getLogger(__name__)

METHODS: Tuple[str, ...] = ("rel_ume_random", "rel_ume_opt", "rel_fssd_opt", "rel_mmd_median")
DENSITY_METHODS = ("rel_fssd_opt",)
MEDIAN_SUBSAMPLE = 1000


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1)[0])


def check_method(method: str, problem: Problem):
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if method in DENSITY_METHODS and not problem.has_densities:
        raise InputError(f"{method} needs density models, which the {problem.name} problem does not have")


def run_method(
    method: MethodName,
    problem: Problem,
    X: np.ndarray,
    Y: np.ndarray,
    Z: np.ndarray,
    J: int,
    alpha: float,
    train_frac: float = 0.2,
    seed=0,
    optim: Optional[OptimConfig] = None,
) -> TestResult:
    """Full pipeline of one method on one data set.

    Methods that pick locations do so on a `train_frac` share of the rows
    and test on the rest.
    """
    check_method(method, problem)
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    split_seq, tune_seq = seq.spawn(2)
    tune_seed = _seed_int(tune_seq)

    if method == "rel_mmd_median":
        pooled = np.vstack([X, Y, Z])
        med = median_heuristic(pooled, subsample=MEDIAN_SUBSAMPLE, seed=tune_seed)
        return rel_mmd_test(KernelSpec(med ** 2), X, Y, Z, alpha)

    (Xtr, Ytr, Ztr), (Xte, Yte, Zte) = split_train_test(X, Y, Z, train_frac, seed=_seed_int(split_seq))
    optim = (optim or OptimConfig()).model_copy(update={"J": J, "seed": tune_seed})

    if method == "rel_ume_random":
        sigma2 = init_bandwidth(Xtr, Ytr, Ztr, subsample=MEDIAN_SUBSAMPLE, seed=tune_seed)
        pooled = np.vstack([Xtr, Ytr, Ztr])
        rng = np.random.default_rng(tune_seed)
        V = pooled[rng.choice(pooled.shape[0], size=J, replace=False)]
        k = KernelSpec(sigma2)
        return rel_ume_test(k, k, V, V, Xte, Yte, Zte, alpha)

    if method == "rel_ume_opt":
        fitted = optimize_ume_params(Xtr, Ytr, Ztr, optim)
        k = KernelSpec(fitted.sigma2)
        return rel_ume_test(k, k, fitted.locations, fitted.locations, Xte, Yte, Zte, alpha)

    fitted = optimize_fssd_params(problem.model_p, problem.model_q, Ztr, optim)
    k = KernelSpec(fitted.sigma2)
    return rel_fssd_test(k, k, problem.model_p, problem.model_q, fitted.locations, fitted.locations, Zte, alpha)


def trial_seed(seed_base: int, trial_index: int) -> np.random.SeedSequence:
    """Independent stream for trial `trial_index`, split off `seed_base`."""
    return np.random.SeedSequence(entropy=seed_base, spawn_key=(trial_index,))


def run_trial(
    config: ProblemConfig,
    method: MethodName,
    J: int,
    alpha: float,
    train_frac: float,
    seed_base: int,
    optim: Optional[OptimConfig],
    trial_index: int,
) -> TrialRecord:
    problem = build_problem(config)
    data_seq, method_seq = trial_seed(seed_base, trial_index).spawn(2)
    X, Y, Z = problem.sample_triple(config.n, data_seq)
    try:
        with ContextTimer() as t:
            result = run_method(method, problem, X, Y, Z, J, alpha, train_frac, method_seq, optim)
    except Exception as e:
        logger.error(f"Trial {trial_index} of {method} failed: {e}", exc_info=True)
        return TrialRecord(trial_index=trial_index, method=method, error=f"{type(e).__name__}: {e}")
    logger.debug(f"Trial {trial_index} of {method}: stat={result.stat:.4g}, reject={result.reject}")
    return TrialRecord(
        trial_index=trial_index,
        method=method,
        stat=result.stat,
        threshold=finite_or_none(result.threshold),
        p_value=result.p_value,
        reject=result.reject,
        degenerate=result.degenerate,
        wall_time_seconds=t.secs,
    )


def binomial_ci(successes: int, total: int, confidence: float = 0.95) -> Tuple[float, float]:
    if total == 0:
        return 0.0, 1.0
    ci = stats.binomtest(successes, total).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def summarize(records, method: MethodName, J: int, alpha: float, n: int) -> RunSummary:
    done = [r for r in records if r.error is None]
    rejections = sum(r.reject for r in done)
    low, high = binomial_ci(rejections, len(done))
    return RunSummary(
        method=method,
        J=J,
        alpha=alpha,
        n=n,
        trials=len(records),
        rejections=rejections,
        failures=len(records) - len(done),
        rejection_rate=rejections / len(done) if done else 0.0,
        ci_low=low,
        ci_high=high,
    )


def run_trials(
    config: ProblemConfig,
    method: MethodName,
    J: int = 5,
    alpha: float = 0.05,
    trials: int = 300,
    seed_base: int = 0,
    train_frac: float = 0.2,
    optim: Optional[OptimConfig] = None,
    workers: Optional[int] = None,
) -> TrialsReport:
    if trials < 1:
        raise InputError(f"trials must be at least 1, got {trials}")
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    check_method(method, build_problem(config))
    workers = workers or app_config.WORKERS
    logger.info(f"Running {trials} trials of {method} on {config.problem} (n={config.n}, J={J}) with {workers} worker(s).")

    task = partial(run_trial, config, method, J, alpha, train_frac, seed_base, optim)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(task, range(trials)))
    else:
        records = [task(i) for i in range(trials)]
    records.sort(key=lambda r: r.trial_index)

    summary = summarize(records, method, J, alpha, config.n)
    if summary.failures:
        logger.warning(f"{summary.failures} of {trials} trials failed.")
    logger.info(
        f"{method}: rejection rate {summary.rejection_rate:.3f} "
        f"[{summary.ci_low:.3f}, {summary.ci_high:.3f}]"
    )
    return TrialsReport(config=config, summary=summary, records=records)
