# relgof/stats/mmd.py

"""Quadratic-time Rel-MMD baseline."""

import logging
from typing import NamedTuple

import torch

from relgof.schemas import TestResult
from relgof.stats import util
from relgof.stats.inference import StatAndVariance, normal_test_result
from relgof.stats.kernels import KernelSpec

logger = logging.getLogger(__name__)

BLOCK_ROWS = 1024


class GramSums(NamedTuple):
    row: torch.Tensor
    col: torch.Tensor
    total: torch.Tensor


def gram_sums(spec: KernelSpec, A: torch.Tensor, B: torch.Tensor, block: int = BLOCK_ROWS) -> GramSums:
    """Row sums, column sums and total of the Gram matrix [k(a_i, b_j)].

    The matrix is built `block` rows at a time so memory stays O(block * m).
    """
    rows = []
    col = torch.zeros(B.shape[0], dtype=util.DTYPE)
    for start in range(0, A.shape[0], block):
        K = spec.gram(A[start:start + block], B)
        rows.append(torch.sum(K, dim=1))
        col = col + torch.sum(K, dim=0)
    row = torch.cat(rows)
    return GramSums(row, col, torch.sum(row))


def mmd_u_sq(spec: KernelSpec, A, B) -> torch.Tensor:
    """Unbiased MMD^2 between samples A and B (sizes may differ)."""
    Am, Bm = util.as_matrix(A, "A"), util.as_matrix(B, "B")
    util.check_dims(Am, Bm, "A", "B")
    util.check_paired(Am, names=["A"])
    util.check_paired(Bm, names=["B"])
    na, nb = Am.shape[0], Bm.shape[0]
    # k(x, x) = 1 on the diagonal
    aa = (gram_sums(spec, Am, Am).total - na) / (na * (na - 1))
    bb = (gram_sums(spec, Bm, Bm).total - nb) / (nb * (nb - 1))
    ab = gram_sums(spec, Am, Bm).total / (na * nb)
    return aa + bb - 2.0 * ab


def rel_mmd_stat_and_var(spec: KernelSpec, X, Y, Z) -> StatAndVariance:
    """S_hat = MMD_u^2(X, Z) - MMD_u^2(Y, Z) and the variance of its linear projection.

    With x, y, z independent, sqrt(n) S_hat is asymptotically normal with
    variance 4 (Var h_X(x) + Var h_Y(y) + Var h_Z(z)) where
      h_X(x) = E k(x, x') - E k(x, z),
      h_Y(y) = E k(y, y') - E k(y, z),
      h_Z(z) = E k(y, z) - E k(x, z).
    The Z-Z block cancels in the difference and is never formed.
    """
    Xm, Ym, Zm = util.as_matrix(X, "X"), util.as_matrix(Y, "Y"), util.as_matrix(Z, "Z")
    util.check_dims(Xm, Zm, "X", "Z")
    util.check_dims(Ym, Zm, "Y", "Z")
    n = util.check_paired(Xm, Ym, Zm, names=["X", "Y", "Z"])

    xx = gram_sums(spec, Xm, Xm)
    yy = gram_sums(spec, Ym, Ym)
    xz = gram_sums(spec, Xm, Zm)
    yz = gram_sums(spec, Ym, Zm)

    s_hat = (xx.total - yy.total) / (n * (n - 1)) - 2.0 * (xz.total - yz.total) / (n * n)

    h_x = (xx.row - 1.0) / (n - 1) - xz.row / n
    h_y = (yy.row - 1.0) / (n - 1) - yz.row / n
    h_z = yz.col / n - xz.col / n
    nu_hat = 4.0 * (torch.var(h_x, correction=0) + torch.var(h_y, correction=0) + torch.var(h_z, correction=0))
    return StatAndVariance(s_hat, nu_hat)


def rel_mmd_test(spec: KernelSpec, X, Y, Z, alpha: float = 0.05) -> TestResult:
    s_hat, nu_hat = rel_mmd_stat_and_var(spec, X, Y, Z)
    n = util.as_matrix(Z).shape[0]
    result = normal_test_result(s_hat, nu_hat, n, alpha)
    logger.debug(f"Rel-MMD: stat={result.stat:.4g}, threshold={result.threshold:.4g}, reject={result.reject}")
    return result
