# relgof/stats/util.py

"""Tensor plumbing shared by the statistics modules."""

import time
from typing import Union

import numpy as np
import torch

from relgof.stats.errors import InputError

ArrayLike = Union[np.ndarray, torch.Tensor, list, tuple]

DTYPE = torch.float64


def as_matrix(a: ArrayLike, name: str = "sample") -> torch.Tensor:
    """Convert `a` to a 2-d float64 tensor. A 1-d input becomes one row."""
    if torch.is_tensor(a):
        t = a if a.dtype == DTYPE else a.to(DTYPE)
    else:
        t = torch.as_tensor(np.asarray(a, dtype=np.float64))
    if t.dim() == 1:
        t = t.reshape(1, -1)
    if t.dim() != 2:
        raise InputError(f"{name} must be a 2-d matrix, got shape {tuple(t.shape)}")
    return t


def is_vector(a: ArrayLike) -> bool:
    return (a.dim() if torch.is_tensor(a) else np.ndim(a)) == 1


def as_vector(a: ArrayLike, name: str = "vector") -> torch.Tensor:
    t = as_matrix(a, name)
    if t.shape[0] != 1:
        raise InputError(f"{name} must be a vector, got shape {tuple(t.shape)}")
    return t[0]


def check_dims(A: torch.Tensor, B: torch.Tensor, a_name: str, b_name: str):
    if A.shape[1] != B.shape[1]:
        raise InputError(
            f"dimension mismatch: {a_name} has {A.shape[1]} columns, {b_name} has {B.shape[1]}"
        )


def check_paired(*samples: torch.Tensor, names=None, min_rows: int = 2):
    """All samples must share one row count n >= min_rows."""
    names = names or [f"sample {i}" for i in range(len(samples))]
    n = samples[0].shape[0]
    for s, name in zip(samples, names):
        if s.shape[0] != n:
            raise InputError(
                f"paired samples need equal sizes: {names[0]} has {n} rows, {name} has {s.shape[0]}"
            )
    if n < min_rows:
        raise InputError(f"need at least {min_rows} rows, got {n}")
    return n


def sq_dist(X: torch.Tensor, Y: torch.Tensor) -> torch.Tensor:
    """n x m matrix of squared Euclidean distances.

    Formed from explicit differences so that d(x, x) is exactly 0 and the
    gradient is defined everywhere.
    """
    diff = X[:, None, :] - Y[None, :, :]
    return torch.sum(diff * diff, dim=-1)


def paired_ustat(A: torch.Tensor) -> torch.Tensor:
    """Second-order U-statistic with kernel h(t, t') = a(t)^T a(t').

    A is n x k, row i holding a(t_i). Computed in O(nk) as
    (||sum_i a_i||^2 - sum_i ||a_i||^2) / (n(n-1)).
    """
    n = A.shape[0]
    total = torch.sum(A, dim=0)
    return (torch.dot(total, total) - torch.sum(A * A)) / (n * (n - 1))


def cross_cov(A: torch.Tensor, B: torch.Tensor) -> torch.Tensor:
    """Empirical cross-covariance with 1/n normalization. A: n x a, B: n x b."""
    n = A.shape[0]
    Ac = A - torch.mean(A, dim=0)
    Bc = B - torch.mean(B, dim=0)
    return Ac.T.matmul(Bc) / n


def to_numpy(t: torch.Tensor) -> np.ndarray:
    return t.detach().cpu().numpy()


class ContextTimer(object):
    """
    A class used to time an execution of a code snippet.
    Use it with with .... as ...
    For example,

        with ContextTimer() as t:
            # do something
        time_spent = t.secs
    """

    def __init__(self):
        self.start = None
        self.end = None
        self.secs = None

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *args):
        self.end = time.perf_counter()
        self.secs = self.end - self.start
