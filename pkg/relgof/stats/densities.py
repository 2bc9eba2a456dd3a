# relgof/stats/densities.py

"""
Density models known up to their normalizer.

A DensityModel exposes the score grad_z log q(z), which is all Rel-FSSD
needs, plus an unnormalized log density and, for synthetic models, an
exact or MCMC sampler. Scores are coded separately from `log_den` so one
can be checked against finite differences of the other.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np
import torch
from scipy import special

from relgof.schemas import GibbsConfig
from relgof.stats import util
from relgof.stats.errors import InputError

logger = logging.getLogger(__name__)


class DensityModel(ABC):
    """An unnormalized density on R^d. Instances are immutable."""

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def score(self, Z: torch.Tensor) -> torch.Tensor:
        """n x d matrix of grad_z log q(z) for the rows z of Z."""
        ...

    @abstractmethod
    def log_den(self, Z: torch.Tensor) -> torch.Tensor:
        """Unnormalized log density at the rows of Z (length-n tensor)."""
        ...

    @property
    def has_sampler(self) -> bool:
        return False

    def sample(self, n: int, seed=None) -> np.ndarray:
        """n x d sample. Deterministic given `seed` (int, SeedSequence or Generator)."""
        raise NotImplementedError(f"{type(self).__name__} has no sampler")


class IsotropicNormal(DensityModel):
    def __init__(self, mean: Sequence[float], variance: float):
        mean = np.asarray(mean, dtype=np.float64).reshape(-1)
        if not variance > 0.0:
            raise InputError(f"variance must be positive, got {variance}")
        if not np.all(np.isfinite(mean)):
            raise InputError("mean must be finite")
        self.mean = mean
        self.variance = float(variance)
        self._mean_t = torch.as_tensor(mean)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def score(self, Z):
        Z = util.as_matrix(Z)
        return (self._mean_t - Z) / self.variance

    def log_den(self, Z):
        Z = util.as_matrix(Z)
        return -0.5 * torch.sum((Z - self._mean_t) ** 2, dim=1) / self.variance

    @property
    def has_sampler(self) -> bool:
        return True

    def sample(self, n, seed=None):
        rng = np.random.default_rng(seed)
        return self.mean + math.sqrt(self.variance) * rng.standard_normal((n, self.dim))


class GaussianMixture(DensityModel):
    """sum_c w_c N(mu_c, Sigma_c). Weights need not be normalized."""

    def __init__(self, means, covariances, weights):
        means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        covariances = np.asarray(covariances, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        C, d = means.shape
        if covariances.shape != (C, d, d):
            raise InputError(f"covariances must have shape {(C, d, d)}, got {covariances.shape}")
        if weights.shape != (C,) or np.any(weights <= 0):
            raise InputError("weights must be positive, one per component")
        self.means = means
        self.covariances = covariances
        self.weights = weights / np.sum(weights)
        self._chol = np.linalg.cholesky(covariances)
        self._means_t = torch.as_tensor(means)
        self._prec_t = torch.as_tensor(np.linalg.inv(covariances))
        _, logdets = np.linalg.slogdet(covariances)
        # log w_c - 0.5 log det Sigma_c
        self._log_coef_t = torch.as_tensor(np.log(self.weights) - 0.5 * logdets)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def _component_terms(self, Z):
        # n x C x d differences, and n x C log w_c N(z; mu_c, Sigma_c) up to a constant
        diff = Z[:, None, :] - self._means_t[None, :, :]
        mahal = torch.einsum("ncd,cde,nce->nc", diff, self._prec_t, diff)
        return diff, self._log_coef_t[None, :] - 0.5 * mahal

    def score(self, Z):
        Z = util.as_matrix(Z)
        diff, log_terms = self._component_terms(Z)
        resp = torch.softmax(log_terms, dim=1)
        comp_scores = -torch.einsum("cde,nce->ncd", self._prec_t, diff)
        return torch.sum(resp[:, :, None] * comp_scores, dim=1)

    def log_den(self, Z):
        Z = util.as_matrix(Z)
        _, log_terms = self._component_terms(Z)
        return torch.logsumexp(log_terms, dim=1)

    @property
    def has_sampler(self) -> bool:
        return True

    def sample(self, n, seed=None):
        rng = np.random.default_rng(seed)
        comps = rng.choice(len(self.weights), size=n, p=self.weights)
        noise = rng.standard_normal((n, self.dim))
        return self.means[comps] + np.einsum("nde,ne->nd", self._chol[comps], noise)


def gaussian_model(mean: Sequence[float], variance: float = 1.0) -> IsotropicNormal:
    return IsotropicNormal(mean, variance)


def _rotated_cov(angle: float, eigenvalues) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    return R @ np.diag(eigenvalues) @ R.T


# Grid centers {0, 5}^2 with equal weights. All components have trace 1, so
# the three mixtures share their global spread and differ only in the shape
# of each blob. r: isotropic, variance 1/2. q: eigenvalues (5/8, 3/8) and p:
# eigenvalues (9/10, 1/10), both rotated by pi/4. p is the more elongated, so
# q is closer to r.
BLOBS_CENTERS = np.array([[0.0, 0.0], [0.0, 5.0], [5.0, 0.0], [5.0, 5.0]])
BLOBS_PRESETS = {
    "r": (0.0, (0.5, 0.5)),
    "q": (math.pi / 4, (0.625, 0.375)),
    "p": (math.pi / 4, (0.9, 0.1)),
}


def blobs_model(variant: Literal["p", "q", "r"]) -> GaussianMixture:
    if variant not in BLOBS_PRESETS:
        raise InputError(f"unknown blobs variant {variant!r}; expected one of p, q, r")
    angle, eigs = BLOBS_PRESETS[variant]
    cov = _rotated_cov(angle, eigs)
    C = BLOBS_CENTERS.shape[0]
    return GaussianMixture(BLOBS_CENTERS, np.repeat(cov[None], C, axis=0), np.ones(C))


def mixture1d_models(mix_left: float = 0.5, separation: float = 2.0):
    """(p, q, r) for the 1-D illustration: p = N(-s, 1), q = N(s, 1),
    r = mix_left p + (1 - mix_left) q."""
    if not 0.0 < mix_left < 1.0:
        raise InputError(f"mix_left must lie in (0, 1), got {mix_left}")
    p = IsotropicNormal([-separation], 1.0)
    q = IsotropicNormal([separation], 1.0)
    r = GaussianMixture(
        [[-separation], [separation]],
        np.ones((2, 1, 1)),
        [mix_left, 1.0 - mix_left],
    )
    return p, q, r


@dataclass(frozen=True)
class RbmParams:
    """Gaussian-Bernoulli RBM p(x) ~ sum_h exp(x^T B h + b^T x + c^T h - ||x||^2 / 2), h in {-1, 1}^dh."""

    B: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.B, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        if B.ndim != 2 or B.shape != (b.shape[0], c.shape[0]) or b.shape[0] < 1 or c.shape[0] < 1:
            raise InputError(f"inconsistent RBM shapes: B {B.shape}, b {b.shape}, c {c.shape}")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise InputError("RBM parameters must be finite")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    @property
    def dim_h(self) -> int:
        return self.c.shape[0]


def random_rbm_params(d: int, dh: int, seed=None) -> RbmParams:
    rng = np.random.default_rng(seed)
    B = rng.choice([-1.0, 1.0], size=(d, dh))
    b = rng.standard_normal(d)
    c = rng.standard_normal(dh)
    return RbmParams(B, b, c)


def rbm_perturb(params: RbmParams, epsilon: float) -> RbmParams:
    """Add epsilon to B[0, 0] only."""
    B = params.B.copy()
    B[0, 0] += epsilon
    return RbmParams(B, params.b.copy(), params.c.copy())


def rbm_sample(params: RbmParams, n: int, seed=None, gibbs: Optional[GibbsConfig] = None) -> np.ndarray:
    """Block Gibbs sampling of the visible units.

    Chains start from N(b, I). Each chain runs `burn_in` sweeps, then emits
    a state every `thinning` sweeps until n states are collected in total.
    """
    gibbs = gibbs or GibbsConfig()
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    chains = min(gibbs.chains or n, n)
    per_chain = -(-n // chains)
    B, b, c = params.B, params.b, params.c

    def sweep(X):
        # P(h_j = 1 | x) = logistic(2 (B^T x + c)_j) under the {-1, 1} coding
        prob = special.expit(2.0 * (X @ B + c))
        H = np.where(rng.random(prob.shape) < prob, 1.0, -1.0)
        return H @ B.T + b + rng.standard_normal((X.shape[0], B.shape[0]))

    X = b + rng.standard_normal((chains, B.shape[0]))
    for _ in range(gibbs.burn_in):
        X = sweep(X)
    states = [X]
    for _ in range(per_chain - 1):
        for _ in range(gibbs.thinning):
            X = sweep(X)
        states.append(X)
    # chain-major order
    out = np.stack(states, axis=1).reshape(-1, B.shape[0])
    return out[:n]


class GaussBernRbm(DensityModel):
    def __init__(self, params: RbmParams, gibbs: Optional[GibbsConfig] = None):
        self.params = params
        self.gibbs = gibbs or GibbsConfig()
        self._B = torch.as_tensor(params.B)
        self._b = torch.as_tensor(params.b)
        self._c = torch.as_tensor(params.c)

    @property
    def dim(self) -> int:
        return self.params.dim

    def score(self, Z):
        # Summing out h gives prod_j 2 cosh((B^T x + c)_j).
        Z = util.as_matrix(Z)
        return self._b - Z + torch.tanh(Z.matmul(self._B) + self._c).matmul(self._B.T)

    def log_den(self, Z):
        Z = util.as_matrix(Z)
        A = Z.matmul(self._B) + self._c
        log_2cosh = torch.logaddexp(A, -A)
        return Z.matmul(self._b) - 0.5 * torch.sum(Z * Z, dim=1) + torch.sum(log_2cosh, dim=1)

    @property
    def has_sampler(self) -> bool:
        return True

    def sample(self, n, seed=None):
        return rbm_sample(self.params, n, seed, self.gibbs)


def rbm_model(params: RbmParams, gibbs: Optional[GibbsConfig] = None) -> GaussBernRbm:
    return GaussBernRbm(params, gibbs)
