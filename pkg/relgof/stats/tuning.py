# relgof/stats/tuning.py

"""
Choosing test locations and the Gaussian bandwidth.

Parameters are chosen by maximizing the power criterion
S_hat / (gamma + sqrt(nu_hat)) on held-out training rows: jointly over the
J x d locations and log sigma2 by gradient ascent, or over a discrete pool
of candidates by scoring or greedy selection.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Literal, NamedTuple, Optional

import numpy as np
import torch

from relgof.schemas import OptimConfig
from relgof.stats import util
from relgof.stats.densities import DensityModel
from relgof.stats.errors import InputError, OptimizationError
from relgof.stats.fssd import checked_score, rel_fssd_stat_and_var
from relgof.stats.inference import (
    DEFAULT_GAMMA,
    VARIANCE_FLOOR,
    StatAndVariance,
    check_gamma,
    power_criterion,
)
from relgof.stats.kernels import KernelSpec, init_bandwidth, median_heuristic
from relgof.stats.ume import rel_ume_stat_and_var

logger = logging.getLogger(__name__)


class PowerCriterion(ABC):
    """Power criterion of a relative test on fixed data, as a function of
    the locations (V = W) and a shared kernel (kX = kY)."""

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def training_rows(self) -> torch.Tensor:
        """Rows from which initial locations are drawn."""
        ...

    @abstractmethod
    def stat_and_var(self, V: torch.Tensor, kernel: KernelSpec) -> StatAndVariance:
        ...

    def evaluate(self, V, kernel: KernelSpec, gamma: float = DEFAULT_GAMMA) -> torch.Tensor:
        s_hat, nu_hat = self.stat_and_var(util.as_matrix(V, "V"), kernel)
        return power_criterion(s_hat, nu_hat, gamma)


class UmeCriterion(PowerCriterion):
    def __init__(self, X, Y, Z):
        self.X = util.as_matrix(X, "X")
        self.Y = util.as_matrix(Y, "Y")
        self.Z = util.as_matrix(Z, "Z")
        util.check_paired(self.X, self.Y, self.Z, names=["X", "Y", "Z"])
        util.check_dims(self.X, self.Z, "X", "Z")
        util.check_dims(self.Y, self.Z, "Y", "Z")

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    def training_rows(self):
        return torch.cat([self.X, self.Y, self.Z], dim=0)

    def stat_and_var(self, V, kernel):
        return rel_ume_stat_and_var(kernel, kernel, V, V, self.X, self.Y, self.Z)


class FssdCriterion(PowerCriterion):
    def __init__(self, model_p: DensityModel, model_q: DensityModel, Z):
        self.model_p = model_p
        self.model_q = model_q
        self.Z = util.as_matrix(Z, "Z")
        util.check_paired(self.Z, names=["Z"])
        # Scores do not depend on the tuned parameters.
        self._scores = (checked_score(model_p, self.Z), checked_score(model_q, self.Z))

    @property
    def dim(self) -> int:
        return self.Z.shape[1]

    def training_rows(self):
        return self.Z

    def stat_and_var(self, V, kernel):
        return rel_fssd_stat_and_var(
            kernel, kernel, self.model_p, self.model_q, V, V, self.Z, scores=self._scores
        )


class CriterionGradient(NamedTuple):
    value: float
    grad_locations: np.ndarray
    grad_log_sigma2: float


def _objective(criterion: PowerCriterion, V: torch.Tensor, log_sigma2: torch.Tensor, gamma: float):
    return criterion.evaluate(V, KernelSpec(torch.exp(log_sigma2)), gamma)


def criterion_gradient(criterion: PowerCriterion, V, sigma2: float, gamma: float = DEFAULT_GAMMA) -> CriterionGradient:
    """Criterion value and its gradient with respect to (V, log sigma2)."""
    Vt = util.as_matrix(V, "V").clone().requires_grad_(True)
    log_s2 = torch.tensor(float(np.log(sigma2)), dtype=util.DTYPE, requires_grad=True)
    obj = _objective(criterion, Vt, log_s2, gamma)
    obj.backward()
    return CriterionGradient(obj.item(), util.to_numpy(Vt.grad), log_s2.grad.item())


@dataclass
class OptimResult:
    locations: np.ndarray
    sigma2: float
    trajectory: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def best(self) -> float:
        return max(self.trajectory)


def _ascend(criterion: PowerCriterion, V0: np.ndarray, sigma2_0: float, config: OptimConfig) -> OptimResult:
    """Gradient ascent with per-iteration step backoff.

    Steps are taken by a plain torch.optim.SGD in maximize mode. Each
    iteration starts from config.step_size and shrinks the learning rate by
    config.backoff, undoing the step, until the objective is finite and not
    lower.
    """
    V = torch.as_tensor(V0, dtype=util.DTYPE).clone().requires_grad_(True)
    log_s2 = torch.tensor(float(np.log(sigma2_0)), dtype=util.DTYPE, requires_grad=True)
    optimizer = torch.optim.SGD([V, log_s2], lr=config.step_size, maximize=True)

    def state():
        return util.to_numpy(V.detach()), float(torch.exp(log_s2.detach()))

    def evaluate_and_backward() -> float:
        optimizer.zero_grad()
        obj = _objective(criterion, V, log_s2, config.gamma)
        obj.backward()
        return obj.item()

    value = evaluate_and_backward()
    if not np.isfinite(value):
        raise OptimizationError("objective is not finite at the initial point", state=(util.to_numpy(V), sigma2_0))
    trajectory = [value]
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        if any(p.grad is not None and not torch.all(torch.isfinite(p.grad)) for p in (V, log_s2)):
            raise OptimizationError(f"gradient is not finite at iteration {it}", state=state())
        saved = (V.detach().clone(), log_s2.detach().clone())
        step = config.step_size
        accepted = False
        saw_finite = False
        for _ in range(config.max_backoffs):
            optimizer.param_groups[0]["lr"] = step
            optimizer.step()
            with torch.no_grad():
                try:
                    cand = _objective(criterion, V, log_s2, config.gamma).item()
                except InputError:
                    cand = float("nan")
            if np.isfinite(cand):
                saw_finite = True
                if cand >= value:
                    accepted = True
                    break
            with torch.no_grad():
                V.copy_(saved[0])
                log_s2.copy_(saved[1])
            step *= config.backoff
        if not accepted:
            if not saw_finite:
                raise OptimizationError(
                    f"no finite objective after {config.max_backoffs} backoffs at iteration {it}", state=state()
                )
            converged = True
            break
        value = evaluate_and_backward()
        trajectory.append(value)
        logger.debug(f"ascent iteration {it}: criterion={value:.6g}, step={step:.3g}")
    V_final, sigma2_final = state()
    return OptimResult(
        locations=V_final,
        sigma2=sigma2_final,
        trajectory=trajectory,
        iterations=it,
        converged=converged,
    )


def _pick_rows(rows: torch.Tensor, J: int, rng: np.random.Generator) -> np.ndarray:
    if rows.shape[0] < J:
        raise InputError(f"cannot draw J={J} initial locations from {rows.shape[0]} training rows")
    idx = rng.choice(rows.shape[0], size=J, replace=False)
    return util.to_numpy(rows[torch.as_tensor(idx)])


def grid_search_bandwidth(
    criterion: PowerCriterion, V0: np.ndarray, sigma2_0: float, exponents, gamma: float = DEFAULT_GAMMA
) -> float:
    """Best of sigma2_0 * 2**k over the exponents at fixed locations V0.

    Returns sigma2_0 when the grid is empty or no grid value gives a finite
    criterion.
    """
    V = torch.as_tensor(V0, dtype=util.DTYPE)
    best_sigma2, best_value = sigma2_0, -np.inf
    for k in exponents:
        sigma2 = sigma2_0 * 2.0 ** k
        with torch.no_grad():
            try:
                value = criterion.evaluate(V, KernelSpec(sigma2), gamma).item()
            except InputError:
                continue
        if np.isfinite(value) and value > best_value:
            best_sigma2, best_value = sigma2, value
    return best_sigma2


def optimize_params(criterion: PowerCriterion, sigma2_0: float, config: OptimConfig) -> OptimResult:
    """Best of config.restarts ascents, each from J random training rows.

    Every restart first picks its starting bandwidth from the grid
    sigma2_0 * 2**config.width_grid at its initial locations.
    """
    rng = np.random.default_rng(config.seed)
    rows = criterion.training_rows()
    best: Optional[OptimResult] = None
    for restart in range(config.restarts):
        V0 = _pick_rows(rows, config.J, rng)
        start = grid_search_bandwidth(criterion, V0, sigma2_0, config.width_grid, config.gamma)
        result = _ascend(criterion, V0, start, config)
        logger.info(
            f"restart {restart}: criterion {result.trajectory[0]:.4g} -> {result.best:.4g} "
            f"in {result.iterations} iterations, sigma2 {start:.4g} -> {result.sigma2:.4g}"
        )
        if best is None or result.best > best.best:
            best = result
    return best


def optimize_ume_params(Xtr, Ytr, Ztr, config: Optional[OptimConfig] = None) -> OptimResult:
    config = config or OptimConfig()
    criterion = UmeCriterion(Xtr, Ytr, Ztr)
    sigma2_0 = init_bandwidth(
        criterion.X, criterion.Y, criterion.Z, subsample=config.median_subsample, seed=config.seed
    )
    return optimize_params(criterion, sigma2_0, config)


def optimize_fssd_params(model_p: DensityModel, model_q: DensityModel, Ztr, config: Optional[OptimConfig] = None) -> OptimResult:
    config = config or OptimConfig()
    criterion = FssdCriterion(model_p, model_q, Ztr)
    # No model samples here, so the bandwidth starts from the median over Z alone.
    sigma2_0 = median_heuristic(criterion.Z, subsample=config.median_subsample, seed=config.seed) ** 2
    return optimize_params(criterion, sigma2_0, config)


def split_train_test(X, Y, Z, train_fraction: float = 0.2, seed=None):
    """Split paired samples by one row permutation. Returns ((Xtr, Ytr, Ztr), (Xte, Yte, Zte))."""
    if not 0.0 < train_fraction < 1.0:
        raise InputError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    X, Y, Z = (np.asarray(a, dtype=np.float64) for a in (X, Y, Z))
    n = X.shape[0]
    if Y.shape[0] != n or Z.shape[0] != n:
        raise InputError(f"paired samples need equal sizes, got {X.shape[0]}, {Y.shape[0]}, {Z.shape[0]}")
    n_train = int(round(train_fraction * n))
    if n_train < 2 or n - n_train < 2:
        raise InputError(f"split of {n} rows at fraction {train_fraction} leaves fewer than 2 rows on one side")
    perm = np.random.default_rng(seed).permutation(n)
    tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    return (X[tr], Y[tr], Z[tr]), (X[te], Y[te], Z[te])


@dataclass
class PoolScores:
    scores: np.ndarray
    degenerate: np.ndarray

    def ranking(self, descending: bool = True) -> np.ndarray:
        order = np.argsort(self.scores, kind="stable")
        return order[::-1] if descending else order


def _criterion_or_none(criterion: PowerCriterion, V: torch.Tensor, kernel: KernelSpec, gamma: float) -> Optional[float]:
    with torch.no_grad():
        s_hat, nu_hat = criterion.stat_and_var(V, kernel)
    if not torch.isfinite(s_hat) or not torch.isfinite(nu_hat) or nu_hat.item() < VARIANCE_FLOOR:
        return None
    return power_criterion(s_hat, nu_hat, gamma).item()


def score_candidate_pool(pool, criterion: PowerCriterion, kernel: KernelSpec, gamma: float = DEFAULT_GAMMA) -> PoolScores:
    """Power criterion of every pool row used alone as the single location (J = 1)."""
    check_gamma(gamma)
    P = util.as_matrix(pool, "pool")
    if P.shape[0] == 0:
        raise InputError("candidate pool is empty")
    if P.shape[1] != criterion.dim:
        raise InputError(f"dimension mismatch: pool has {P.shape[1]} columns, data has {criterion.dim}")
    scores = np.zeros(P.shape[0])
    degenerate = np.zeros(P.shape[0], dtype=bool)
    for i in range(P.shape[0]):
        value = _criterion_or_none(criterion, P[i:i + 1], kernel, gamma)
        if value is None:
            degenerate[i] = True
        else:
            scores[i] = value
    if np.any(degenerate):
        logger.warning(f"{int(degenerate.sum())} of {P.shape[0]} candidates have a degenerate variance; scored 0.")
    return PoolScores(scores, degenerate)


@dataclass
class GreedySelection:
    locations: np.ndarray
    indices: List[int]
    trajectory: List[float]
    exhausted: bool = False
    stalled: bool = False


def greedy_select(
    pool,
    J: int,
    direction: Literal["maximize", "minimize"],
    criterion: PowerCriterion,
    kernel: KernelSpec,
    gamma: float = DEFAULT_GAMMA,
    require_improvement: bool = True,
) -> GreedySelection:
    """Grow a location set one pool row at a time, each time adding the row
    that gives the best set criterion in `direction`.

    With `require_improvement` the set criterion is monotone in `direction`:
    selection stops early (`stalled`) once no remaining row improves it, so
    fewer than J rows may come back. Without it exactly J rows are returned
    unless the pool runs out of finite candidates.
    """
    if direction not in ("maximize", "minimize"):
        raise InputError(f"direction must be 'maximize' or 'minimize', got {direction!r}")
    check_gamma(gamma)
    P = util.as_matrix(pool, "pool")
    if P.shape[0] < J:
        raise InputError(f"pool has {P.shape[0]} rows, fewer than J={J}")
    sign = 1.0 if direction == "maximize" else -1.0
    chosen: List[int] = []
    trajectory: List[float] = []
    exhausted = stalled = False
    while len(chosen) < J:
        best_idx, best_val = None, None
        for i in range(P.shape[0]):
            if i in chosen:
                continue
            V = P[chosen + [i]]
            value = _criterion_or_none(criterion, V, kernel, gamma)
            if value is None:
                continue
            if best_val is None or sign * value > sign * best_val:
                best_idx, best_val = i, value
        if best_idx is None:
            exhausted = True
            logger.warning(f"greedy selection ran out of finite candidates after {len(chosen)} picks")
            break
        if require_improvement and trajectory and sign * best_val <= sign * trajectory[-1]:
            stalled = True
            break
        chosen.append(best_idx)
        trajectory.append(best_val)
        logger.debug(f"greedy pick {len(chosen)}: row {best_idx}, criterion {best_val:.4g}")
    return GreedySelection(
        locations=util.to_numpy(P[chosen]) if chosen else np.empty((0, P.shape[1])),
        indices=chosen,
        trajectory=trajectory,
        exhausted=exhausted,
        stalled=stalled,
    )
