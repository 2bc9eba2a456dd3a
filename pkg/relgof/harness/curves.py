# relgof/harness/curves.py

"""
Location-level views of a comparison: criterion curves over a 1-D grid,
pool scoring and greedy selection, each reported together with a
held-out test so that locations are only read as evidence when the test
rejects H0.
"""

import logging
from typing import List, Literal, Optional, Sequence

import numpy as np

from relgof.harness.problems import Problem, build_problem
from relgof.harness.trials import MEDIAN_SUBSAMPLE
from relgof.schemas import CriterionKind, CurveRow, LocationReport, ProblemConfig, TestResult
from relgof.stats import util
from relgof.stats.errors import InputError
from relgof.stats.fssd import rel_fssd_test, stein_witness
from relgof.stats.inference import DEFAULT_GAMMA
from relgof.stats.kernels import KernelSpec, init_bandwidth, median_heuristic
from relgof.stats.tuning import (
    FssdCriterion,
    PowerCriterion,
    UmeCriterion,
    greedy_select,
    score_candidate_pool,
    split_train_test,
)
from relgof.stats.ume import mmd_witness, rel_ume_test

logger = logging.getLogger(__name__)


def make_criterion(kind: CriterionKind, problem: Problem, X, Y, Z) -> PowerCriterion:
    if kind == "ume":
        return UmeCriterion(X, Y, Z)
    if kind == "fssd":
        if not problem.has_densities:
            raise InputError(f"the fssd criterion needs density models, which {problem.name} does not have")
        return FssdCriterion(problem.model_p, problem.model_q, Z)
    raise InputError(f"unknown criterion {kind!r}")


def default_sigma2(kind: CriterionKind, X, Y, Z, seed=0) -> float:
    if kind == "ume":
        return init_bandwidth(X, Y, Z, subsample=MEDIAN_SUBSAMPLE, seed=seed)
    return median_heuristic(Z, subsample=MEDIAN_SUBSAMPLE, seed=seed) ** 2


def criterion_curve(
    config: ProblemConfig,
    grid: Sequence[float],
    sigma2: float = 1.0,
    gamma: float = DEFAULT_GAMMA,
    seed: int = 0,
) -> List[CurveRow]:
    """Rel-UME and Rel-FSSD criteria with a single location swept over a 1-D
    grid, plus the MMD and Stein witness functions they are built from."""
    problem = build_problem(config)
    X, Y, Z = problem.sample_triple(config.n, seed)
    if Z.shape[1] != 1:
        raise InputError(f"criterion curves need 1-d data, got dimension {Z.shape[1]}")
    locations = np.asarray(grid, dtype=np.float64).reshape(-1, 1)
    kernel = KernelSpec(sigma2)
    rows: List[CurveRow] = []

    def add(method: str, values):
        rows.extend(CurveRow(x=float(x), method=method, value=float(v)) for x, v in zip(locations[:, 0], values))

    ume_scores = score_candidate_pool(locations, UmeCriterion(X, Y, Z), kernel, gamma)
    add("rel_ume", ume_scores.scores)
    add("mmd_witness_p", util.to_numpy(mmd_witness(kernel, X, Z, locations)))
    add("mmd_witness_q", util.to_numpy(mmd_witness(kernel, Y, Z, locations)))
    if problem.has_densities:
        fssd_scores = score_candidate_pool(locations, FssdCriterion(problem.model_p, problem.model_q, Z), kernel, gamma)
        add("rel_fssd", fssd_scores.scores)
        add("stein_witness_p", util.to_numpy(stein_witness(kernel, problem.model_p, Z, locations))[:, 0])
        add("stein_witness_q", util.to_numpy(stein_witness(kernel, problem.model_q, Z, locations))[:, 0])
    logger.info(f"Criterion curves over {len(locations)} grid points on {config.problem} (n={config.n}).")
    return rows


def _held_out_test(kind, problem, kernel, V, test_data, alpha) -> TestResult:
    Xte, Yte, Zte = test_data
    if kind == "ume":
        return rel_ume_test(kernel, kernel, V, V, Xte, Yte, Zte, alpha)
    return rel_fssd_test(kernel, kernel, problem.model_p, problem.model_q, V, V, Zte, alpha)


def _prepare(config: ProblemConfig, kind: CriterionKind, pool, pool_size: int, seed: int, train_frac: float):
    problem = build_problem(config)
    data_seq, pool_seq, split_seq = np.random.SeedSequence(seed).spawn(3)
    X, Y, Z = problem.sample_triple(config.n, data_seq)
    train, test = split_train_test(X, Y, Z, train_frac, seed=int(split_seq.generate_state(1)[0]))
    if pool is None:
        pool = problem.draw_z(pool_size, np.random.default_rng(pool_seq))
    pool = np.asarray(pool, dtype=np.float64)
    if pool.ndim != 2 or pool.shape[1] != Z.shape[1]:
        raise InputError(f"pool must be a matrix with {Z.shape[1]} columns, got shape {pool.shape}")
    criterion = make_criterion(kind, problem, *train)
    return problem, criterion, train, test, pool


def pool_score_report(
    config: ProblemConfig,
    kind: CriterionKind = "ume",
    pool=None,
    J: int = 1,
    pool_size: int = 200,
    sigma2: Optional[float] = None,
    gamma: float = DEFAULT_GAMMA,
    alpha: float = 0.05,
    seed: int = 0,
    train_frac: float = 0.2,
) -> LocationReport:
    """Score each pool row on the training split; test the top J on the rest."""
    problem, criterion, train, test, pool = _prepare(config, kind, pool, pool_size, seed, train_frac)
    if J > pool.shape[0]:
        raise InputError(f"pool has {pool.shape[0]} rows, fewer than J={J}")
    sigma2 = sigma2 or default_sigma2(kind, *train, seed=seed)
    kernel = KernelSpec(sigma2)
    scores = score_candidate_pool(pool, criterion, kernel, gamma)
    top = [int(i) for i in scores.ranking(descending=True)[:J]]
    result = _held_out_test(kind, problem, kernel, pool[top], test, alpha)
    if not result.reject:
        logger.warning("Held-out test did not reject H0; the top-scored locations should not be interpreted.")
    return LocationReport(
        config=config,
        criterion=kind,
        locations=pool[top].tolist(),
        indices=top,
        values=[float(scores.scores[i]) for i in top],
        sigma2=sigma2,
        test=result,
        scores=scores.scores.tolist(),
        degenerate=scores.degenerate.tolist(),
    )


def greedy_report(
    config: ProblemConfig,
    kind: CriterionKind = "ume",
    pool=None,
    J: int = 5,
    direction: Literal["maximize", "minimize"] = "maximize",
    require_improvement: bool = True,
    pool_size: int = 200,
    sigma2: Optional[float] = None,
    gamma: float = DEFAULT_GAMMA,
    alpha: float = 0.05,
    seed: int = 0,
    train_frac: float = 0.2,
) -> LocationReport:
    """Greedy selection on the training split; test the selection on the rest."""
    problem, criterion, train, test, pool = _prepare(config, kind, pool, pool_size, seed, train_frac)
    sigma2 = sigma2 or default_sigma2(kind, *train, seed=seed)
    kernel = KernelSpec(sigma2)
    selection = greedy_select(pool, J, direction, criterion, kernel, gamma, require_improvement)
    if not selection.indices:
        raise InputError("greedy selection found no candidate with a finite criterion")
    result = _held_out_test(kind, problem, kernel, selection.locations, test, alpha)
    if not result.reject:
        logger.warning("Held-out test did not reject H0; the selected locations should not be interpreted.")
    return LocationReport(
        config=config,
        criterion=kind,
        locations=selection.locations.tolist(),
        indices=selection.indices,
        values=selection.trajectory,
        sigma2=sigma2,
        test=result,
        exhausted=selection.exhausted,
        stalled=selection.stalled,
    )
