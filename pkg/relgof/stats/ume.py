# relgof/stats/ume.py

"""
Unnormalized mean embedding (UME) distance and the three-sample Rel-UME
test.

The UME between Q and R at locations W is ||psi_W^Q - psi_W^R||^2 where
psi_W(y) = (k(y, w_1), ..., k(y, w_J)) / sqrt(J). Rel-UME compares
U^2(P, R) with U^2(Q, R) and rejects H0: U^2(P, R) <= U^2(Q, R) when the
standardized difference is large. A rejection says Q fits R better at the
given locations.
"""

import logging
import math
from typing import NamedTuple

import torch

from relgof.schemas import TestResult
from relgof.stats import util
from relgof.stats.inference import (
    DEFAULT_GAMMA,
    StatAndVariance,
    check_gamma,
    normal_test_result,
    power_criterion,
)
from relgof.stats.kernels import KernelSpec

logger = logging.getLogger(__name__)


class UmeVarianceTerms(NamedTuple):
    zeta_p2: torch.Tensor
    zeta_pq: torch.Tensor
    zeta_q2: torch.Tensor


def feature_map(spec: KernelSpec, V, x) -> torch.Tensor:
    """psi_V(x). A vector x gives a J-vector, an n x d matrix gives n x J."""
    Vm = util.as_matrix(V, "V")
    single = util.is_vector(x)
    X = util.as_matrix(x, "x")
    util.check_dims(X, Vm, "x", "V")
    J = Vm.shape[0]
    features = spec.gram(X, Vm) / math.sqrt(J)
    return features[0] if single else features


def ume_sq(spec: KernelSpec, V, Y, Z) -> torch.Tensor:
    """Unbiased paired estimate of U^2(Q, R) from Y ~ Q, Z ~ R. Linear in n; may be negative."""
    Ym, Zm = util.as_matrix(Y, "Y"), util.as_matrix(Z, "Z")
    util.check_paired(Ym, Zm, names=["Y", "Z"])
    diff = feature_map(spec, V, Ym) - feature_map(spec, V, Zm)
    return util.paired_ustat(diff)


def _features(kX, kY, V, W, X, Y, Z):
    Xm, Ym, Zm = util.as_matrix(X, "X"), util.as_matrix(Y, "Y"), util.as_matrix(Z, "Z")
    util.check_paired(Xm, Ym, Zm, names=["X", "Y", "Z"])
    fx = feature_map(kX, V, Xm)
    fzv = feature_map(kX, V, Zm)
    fy = feature_map(kY, W, Ym)
    fzw = feature_map(kY, W, Zm)
    return fx, fzv, fy, fzw


def _variance_terms(fx, fzv, fy, fzw) -> UmeVarianceTerms:
    u = torch.mean(fx, dim=0) - torch.mean(fzv, dim=0)
    w = torch.mean(fy, dim=0) - torch.mean(fzw, dim=0)
    C_p = util.cross_cov(fx, fx) + util.cross_cov(fzv, fzv)
    C_q = util.cross_cov(fy, fy) + util.cross_cov(fzw, fzw)
    C_vw = util.cross_cov(fzv, fzw)
    return UmeVarianceTerms(
        zeta_p2=u.matmul(C_p).matmul(u),
        zeta_pq=u.matmul(C_vw).matmul(w),
        zeta_q2=w.matmul(C_q).matmul(w),
    )


def ume_variance_terms(kX, kY, V, W, X, Y, Z) -> UmeVarianceTerms:
    return _variance_terms(*_features(kX, kY, V, W, X, Y, Z))


def rel_ume_stat_and_var(kX: KernelSpec, kY: KernelSpec, V, W, X, Y, Z) -> StatAndVariance:
    """S_hat = U^2(P, R) - U^2(Q, R) estimates and the plug-in asymptotic variance of sqrt(n) S_hat."""
    fx, fzv, fy, fzw = _features(kX, kY, V, W, X, Y, Z)
    s_hat = util.paired_ustat(fx - fzv) - util.paired_ustat(fy - fzw)
    terms = _variance_terms(fx, fzv, fy, fzw)
    nu_hat = 4.0 * (terms.zeta_p2 - 2.0 * terms.zeta_pq + terms.zeta_q2)
    return StatAndVariance(s_hat, torch.clamp(nu_hat, min=0.0))


def rel_ume_test(kX, kY, V, W, X, Y, Z, alpha: float = 0.05) -> TestResult:
    s_hat, nu_hat = rel_ume_stat_and_var(kX, kY, V, W, X, Y, Z)
    n = util.as_matrix(Z).shape[0]
    result = normal_test_result(s_hat.detach(), nu_hat.detach(), n, alpha)
    logger.debug(f"Rel-UME: stat={result.stat:.4g}, threshold={result.threshold:.4g}, reject={result.reject}")
    return result


def ume_power_criterion(kX, kY, V, W, X, Y, Z, gamma: float = DEFAULT_GAMMA) -> torch.Tensor:
    """Positive values mean Q fits R better than P does at the locations."""
    check_gamma(gamma)
    s_hat, nu_hat = rel_ume_stat_and_var(kX, kY, V, W, X, Y, Z)
    return power_criterion(s_hat, nu_hat, gamma)


def mmd_witness(spec: KernelSpec, A, B, locations) -> torch.Tensor:
    """Empirical MMD witness mean_a k(a, w) - mean_b k(b, w) at each location."""
    Am, Bm, L = util.as_matrix(A, "A"), util.as_matrix(B, "B"), util.as_matrix(locations, "locations")
    util.check_dims(Am, L, "A", "locations")
    util.check_dims(Bm, L, "B", "locations")
    return torch.mean(spec.gram(Am, L), dim=0) - torch.mean(spec.gram(Bm, L), dim=0)
