# relgof/harness/problems.py

"""Problem presets: where P, Q and R come from for each experiment."""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from relgof.harness.matrix_io import load_triple
from relgof.schemas import ProblemConfig
from relgof.stats import densities
from relgof.stats.densities import DensityModel
from relgof.stats.errors import InputError

logger = logging.getLogger(__name__)

Draw = Callable[[int, np.random.Generator], np.ndarray]

MEAN_SHIFT_DIM = 50
RBM_DIM = 20
RBM_DIM_H = 5
RBM_Q_EPSILON = 0.3


@dataclass(frozen=True)
class Problem:
    """Candidate models p, q (densities when known) and three sample sources."""

    name: str
    draw_x: Draw
    draw_y: Draw
    draw_z: Draw
    model_p: Optional[DensityModel] = None
    model_q: Optional[DensityModel] = None

    @property
    def has_densities(self) -> bool:
        return self.model_p is not None and self.model_q is not None

    def sample_triple(self, n: int, seed) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Independent X ~ P, Y ~ Q, Z ~ R of n rows each."""
        seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        sx, sy, sz = seq.spawn(3)
        return (
            self.draw_x(n, np.random.default_rng(sx)),
            self.draw_y(n, np.random.default_rng(sy)),
            self.draw_z(n, np.random.default_rng(sz)),
        )


def _from_models(name, p: DensityModel, q: DensityModel, r: DensityModel) -> Problem:
    return Problem(name, p.sample, q.sample, r.sample, model_p=p, model_q=q)


def _rows_of(M: np.ndarray, label: str) -> Draw:
    def draw(n, rng):
        if n > M.shape[0]:
            raise InputError(f"requested {n} rows from {label}, which has only {M.shape[0]}")
        return M[np.sort(rng.choice(M.shape[0], size=n, replace=False))]

    return draw


@lru_cache(maxsize=16)
def _external_triple(x_path, y_path, z_path):
    return load_triple(x_path, y_path, z_path)


def build_problem(config: ProblemConfig) -> Problem:
    kind = config.problem
    if kind == "mean_shift":
        d = config.d or MEAN_SHIFT_DIM
        shift = np.zeros(d)
        p_mean, q_mean = shift.copy(), shift.copy()
        p_mean[0], q_mean[0] = 0.5, 1.0
        return _from_models(
            kind,
            densities.gaussian_model(p_mean, 1.0),
            densities.gaussian_model(q_mean, 1.0),
            densities.gaussian_model(shift, 1.0),
        )
    if kind == "blobs":
        return _from_models(kind, *(densities.blobs_model(v) for v in ("p", "q", "r")))
    if kind == "mixture1d":
        return _from_models(kind, *densities.mixture1d_models(config.mix_left))
    if kind == "rbm":
        # Parameters are drawn once per problem seed and shared by every trial.
        base = densities.random_rbm_params(config.d or RBM_DIM, config.d_h or RBM_DIM_H, config.seed_problem)
        p = densities.rbm_model(densities.rbm_perturb(base, config.epsilon), config.gibbs)
        q = densities.rbm_model(densities.rbm_perturb(base, RBM_Q_EPSILON), config.gibbs)
        r = densities.rbm_model(base, config.gibbs)
        return _from_models(kind, p, q, r)
    if kind == "external":
        X, Y, Z = _external_triple(config.x_path, config.y_path, config.z_path)
        logger.info(f"External problem: X {X.shape}, Y {Y.shape}, Z {Z.shape}")
        return Problem(kind, _rows_of(X, "X"), _rows_of(Y, "Y"), _rows_of(Z, "Z"))
    raise InputError(f"unknown problem {kind!r}")
