# relgof/stats/fssd.py

"""
Finite-set Stein discrepancy (FSSD) and the Rel-FSSD test.

The Stein feature of z at locations W is the d x J matrix
Xi[i, j] = (k(z, w_j) d_i log q(z) + d k(z, w_j) / d z_i) / sqrt(dJ),
vectorized column by column into tau(z). Only the score of q enters, so
every quantity here is independent of the normalizer of q.
"""

import logging
import math
from typing import NamedTuple, Optional

import torch

from relgof.schemas import TestResult
from relgof.stats import util
from relgof.stats.densities import DensityModel
from relgof.stats.errors import EvaluationError, InputError
from relgof.stats.inference import (
    DEFAULT_GAMMA,
    StatAndVariance,
    check_gamma,
    normal_test_result,
    power_criterion,
)
from relgof.stats.kernels import KernelSpec

logger = logging.getLogger(__name__)


class FssdVarianceTerms(NamedTuple):
    sigma_p2: torch.Tensor
    sigma_pq: torch.Tensor
    sigma_q2: torch.Tensor


def checked_score(model: DensityModel, Z: torch.Tensor) -> torch.Tensor:
    """model.score(Z), raising EvaluationError at the first non-finite entry."""
    if model.dim != Z.shape[1]:
        raise InputError(f"{type(model).__name__} has dimension {model.dim} but Z has {Z.shape[1]} columns")
    S = model.score(Z)
    bad = ~torch.isfinite(S)
    if torch.any(bad):
        row, col = (int(i) for i in torch.nonzero(bad)[0])
        raise EvaluationError(
            f"score of {type(model).__name__} is not finite at row {row}, coordinate {col}"
        )
    return S


def stein_features(
    spec: KernelSpec,
    model: DensityModel,
    W,
    Z,
    score: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """n x dJ matrix whose row i is tau(z_i); entry j*d + i holds Xi[i, j].

    score: precomputed model.score(Z), reused when only W or the kernel change.
    """
    Wm, Zm = util.as_matrix(W, "W"), util.as_matrix(Z, "Z")
    util.check_dims(Zm, Wm, "Z", "W")
    n, d = Zm.shape
    J = Wm.shape[0]
    if score is None:
        S = checked_score(model, Zm)
    elif tuple(score.shape) != tuple(Zm.shape):
        raise InputError(f"precomputed score has shape {tuple(score.shape)}, expected {tuple(Zm.shape)}")
    else:
        S = score
    K = spec.gram(Zm, Wm)
    # n x J x d: k(z, w_j) score_i(z) + k(z, w_j) (w_j,i - z_i) / sigma2
    Xi = K[:, :, None] * (S[:, None, :] + (Wm[None, :, :] - Zm[:, None, :]) / spec.sigma2)
    return Xi.reshape(n, J * d) / math.sqrt(d * J)


def stein_feature(spec: KernelSpec, model: DensityModel, W, z) -> torch.Tensor:
    return stein_features(spec, model, W, util.as_vector(z, "z")[None, :])[0]


def fssd_sq(spec: KernelSpec, model: DensityModel, W, Z) -> torch.Tensor:
    """Unbiased FSSD^2 of `model` against the sample Z. O(Jdn); may be negative."""
    Zm = util.as_matrix(Z, "Z")
    util.check_paired(Zm, names=["Z"])
    return util.paired_ustat(stein_features(spec, model, W, Zm))


def _features(kX, kY, model_p, model_q, V, W, Z, scores=None):
    Zm = util.as_matrix(Z, "Z")
    util.check_paired(Zm, names=["Z"])
    score_p, score_q = scores if scores is not None else (None, None)
    tp = stein_features(kX, model_p, V, Zm, score=score_p)
    tq = stein_features(kY, model_q, W, Zm, score=score_q)
    return tp, tq


def _variance_terms(tp, tq) -> FssdVarianceTerms:
    mu_p = torch.mean(tp, dim=0)
    mu_q = torch.mean(tq, dim=0)
    return FssdVarianceTerms(
        sigma_p2=mu_p.matmul(util.cross_cov(tp, tp)).matmul(mu_p),
        sigma_pq=mu_p.matmul(util.cross_cov(tp, tq)).matmul(mu_q),
        sigma_q2=mu_q.matmul(util.cross_cov(tq, tq)).matmul(mu_q),
    )


def fssd_variance_terms(kX, kY, model_p, model_q, V, W, Z) -> FssdVarianceTerms:
    return _variance_terms(*_features(kX, kY, model_p, model_q, V, W, Z))


def rel_fssd_stat_and_var(
    kX: KernelSpec,
    kY: KernelSpec,
    model_p: DensityModel,
    model_q: DensityModel,
    V,
    W,
    Z,
    scores=None,
) -> StatAndVariance:
    """S_hat = FSSD^2(p) - FSSD^2(q) on Z, and the plug-in variance of sqrt(n) S_hat.

    scores: optional pair (score_p(Z), score_q(Z)) computed beforehand.
    """
    tp, tq = _features(kX, kY, model_p, model_q, V, W, Z, scores)
    s_hat = util.paired_ustat(tp) - util.paired_ustat(tq)
    terms = _variance_terms(tp, tq)
    nu_hat = 4.0 * (terms.sigma_p2 - 2.0 * terms.sigma_pq + terms.sigma_q2)
    return StatAndVariance(s_hat, torch.clamp(nu_hat, min=0.0))


def rel_fssd_test(kX, kY, model_p, model_q, V, W, Z, alpha: float = 0.05) -> TestResult:
    s_hat, nu_hat = rel_fssd_stat_and_var(kX, kY, model_p, model_q, V, W, Z)
    n = util.as_matrix(Z).shape[0]
    result = normal_test_result(s_hat.detach(), nu_hat.detach(), n, alpha)
    logger.debug(f"Rel-FSSD: stat={result.stat:.4g}, threshold={result.threshold:.4g}, reject={result.reject}")
    return result


def fssd_power_criterion(kX, kY, model_p, model_q, V, W, Z, gamma: float = DEFAULT_GAMMA) -> torch.Tensor:
    check_gamma(gamma)
    s_hat, nu_hat = rel_fssd_stat_and_var(kX, kY, model_p, model_q, V, W, Z)
    return power_criterion(s_hat, nu_hat, gamma)


def stein_witness(spec: KernelSpec, model: DensityModel, Z, locations) -> torch.Tensor:
    """Empirical Stein witness g(w) = mean_z xi(z, w), shape J x d."""
    Zm, L = util.as_matrix(Z, "Z"), util.as_matrix(locations, "locations")
    util.check_dims(Zm, L, "Z", "locations")
    S = checked_score(model, Zm)
    K = spec.gram(Zm, L)
    Xi = K[:, :, None] * (S[:, None, :] + (L[None, :, :] - Zm[:, None, :]) / spec.sigma2)
    return torch.mean(Xi, dim=0)
