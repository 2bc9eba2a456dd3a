# relgof/stats/kernels.py

"""Gaussian kernel k(x, y) = exp(-||x - y||^2 / (2 sigma2)) and bandwidth heuristics."""

import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import torch

from relgof.stats import util
from relgof.stats.errors import DegenerateSampleError, InputError

logger = logging.getLogger(__name__)


class DegenerateMedianWarning(UserWarning):
    """Some, but not all, pairwise distances are zero and the median is 0."""


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel with squared bandwidth `sigma2`.

    `sigma2` may be a 0-d tensor so the kernel can sit inside an autograd
    graph while its bandwidth is being optimized.
    """

    sigma2: Union[float, torch.Tensor]

    def __post_init__(self):
        value = float(self.sigma2.detach()) if torch.is_tensor(self.sigma2) else float(self.sigma2)
        if not np.isfinite(value) or value <= 0.0:
            raise InputError(f"sigma2 must be finite and positive, got {value}")

    def gram(self, X: torch.Tensor, Y: torch.Tensor) -> torch.Tensor:
        """n x m matrix [k(x_i, y_j)]."""
        return torch.exp(-util.sq_dist(X, Y) / (2.0 * self.sigma2))

    def grad_x(self, X: torch.Tensor, Y: torch.Tensor) -> torch.Tensor:
        """n x m x d tensor with [i, j, :] = grad_x k(x_i, y_j) = k(x_i, y_j) (y_j - x_i) / sigma2."""
        K = self.gram(X, Y)
        diff = Y[None, :, :] - X[:, None, :]
        return K[:, :, None] * diff / self.sigma2


def kernel_eval(spec: KernelSpec, x, y) -> float:
    xv = util.as_vector(x, "x")
    yv = util.as_vector(y, "y")
    if xv.shape[0] != yv.shape[0]:
        raise InputError(f"dimension mismatch: x has {xv.shape[0]} entries, y has {yv.shape[0]}")
    return spec.gram(xv[None, :], yv[None, :])[0, 0].item()


def kernel_grad_x(spec: KernelSpec, x, y) -> np.ndarray:
    xv = util.as_vector(x, "x")
    yv = util.as_vector(y, "y")
    if xv.shape[0] != yv.shape[0]:
        raise InputError(f"dimension mismatch: x has {xv.shape[0]} entries, y has {yv.shape[0]}")
    return util.to_numpy(spec.grad_x(xv[None, :], yv[None, :])[0, 0])


def median_heuristic(sample, subsample: Optional[int] = None, seed=None) -> float:
    """Median of ||x - x'|| over distinct index pairs of `sample`.

    subsample: if given and smaller than the number of rows, the median is
        taken over a random subset of that many rows (drawn with `seed`).
    """
    A = util.as_matrix(sample)
    n = A.shape[0]
    if n < 2:
        raise InputError(f"median heuristic needs at least 2 rows, got {n}")
    if subsample is not None and n > subsample:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(n, size=subsample, replace=False))
        A = A[torch.as_tensor(idx)]
    dists = util.to_numpy(torch.pdist(A))
    if np.all(dists == 0.0):
        raise DegenerateSampleError("all pairwise distances are zero")
    med = float(np.median(dists))
    if med == 0.0:
        logger.warning(f"Median pairwise distance is 0 over {A.shape[0]} rows (duplicated points).")
        warnings.warn("median pairwise distance is 0 because of duplicated points", DegenerateMedianWarning)
    return med


def _union(A: torch.Tensor, B: torch.Tensor) -> torch.Tensor:
    return torch.unique(torch.cat([A, B], dim=0), dim=0)


def init_bandwidth(X, Y, Z, subsample: Optional[int] = None, seed=None) -> float:
    """Starting sigma2 for gradient ascent: ((med_{X u Z} + med_{Y u Z}) / 2)^2."""
    Xm, Ym, Zm = util.as_matrix(X, "X"), util.as_matrix(Y, "Y"), util.as_matrix(Z, "Z")
    util.check_dims(Xm, Zm, "X", "Z")
    util.check_dims(Ym, Zm, "Y", "Z")
    med_xz = median_heuristic(_union(Xm, Zm), subsample=subsample, seed=seed)
    med_yz = median_heuristic(_union(Ym, Zm), subsample=subsample, seed=seed)
    sigma2 = (0.5 * (med_xz + med_yz)) ** 2
    logger.debug(f"init_bandwidth: med_xz={med_xz:.4g}, med_yz={med_yz:.4g}, sigma2={sigma2:.4g}")
    if sigma2 <= 0.0:
        raise DegenerateSampleError("both pooled medians are zero; cannot set a bandwidth")
    return sigma2
