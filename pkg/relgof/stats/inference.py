# relgof/stats/inference.py

"""Normal-null decision rule shared by Rel-UME, Rel-FSSD and Rel-MMD."""

import logging
import math
from typing import NamedTuple

import torch
from scipy import stats

from relgof.schemas import TestResult
from relgof.stats.errors import InputError

logger = logging.getLogger(__name__)

# Below this the normal approximation of the null is not trusted.
VARIANCE_FLOOR = 1e-8

DEFAULT_GAMMA = 1e-4


class StatAndVariance(NamedTuple):
    s_hat: torch.Tensor
    nu_hat: torch.Tensor


def check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")


def check_gamma(gamma: float):
    if gamma < 0.0:
        raise InputError(f"gamma must be non-negative, got {gamma}")


def normal_test_result(s_hat, nu_hat, n: int, alpha: float) -> TestResult:
    """Threshold sqrt(n) S_hat at sqrt(nu_hat) Phi^{-1}(1 - alpha).

    A variance below VARIANCE_FLOOR marks the result degenerate and the test
    does not reject.
    """
    check_alpha(alpha)
    s = float(s_hat)
    nu = max(float(nu_hat), 0.0)
    stat = math.sqrt(n) * s
    if nu < VARIANCE_FLOOR:
        logger.warning(f"Degenerate variance estimate {nu:.3g}; not rejecting H0.")
        return TestResult(
            stat=stat,
            variance=nu,
            threshold=math.inf,
            p_value=1.0,
            reject=False,
            alpha=alpha,
            n=n,
            degenerate=True,
        )
    sd = math.sqrt(nu)
    threshold = sd * stats.norm.ppf(1.0 - alpha)
    p_value = float(stats.norm.sf(stat / sd))
    return TestResult(
        stat=stat,
        variance=nu,
        threshold=threshold,
        p_value=p_value,
        reject=bool(stat > threshold),
        alpha=alpha,
        n=n,
        degenerate=False,
    )


def power_criterion(s_hat: torch.Tensor, nu_hat: torch.Tensor, gamma: float) -> torch.Tensor:
    """S_hat / (gamma + sqrt(nu_hat)), differentiable at nu_hat = 0."""
    return s_hat / (gamma + torch.sqrt(torch.clamp(nu_hat, min=1e-16)))
