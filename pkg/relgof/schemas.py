# relgof/schemas.py

from __future__ import annotations

import math
from datetime import datetime
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

ProblemKind = Literal["mean_shift", "blobs", "rbm", "mixture1d", "external"]
MethodName = Literal["rel_ume_random", "rel_ume_opt", "rel_fssd_opt", "rel_mmd_median"]
CriterionKind = Literal["ume", "fssd"]


class TestResult(BaseModel):
    """Outcome of one relative test. `stat` is sqrt(n) S_hat."""

    __test__ = False  # not a pytest class

    stat: float
    variance: float = Field(ge=0.0)
    threshold: float
    p_value: float = Field(ge=0.0, le=1.0)
    reject: bool
    alpha: float = Field(gt=0.0, lt=1.0)
    n: int = Field(gt=0)
    degenerate: bool = False


class GibbsConfig(BaseModel):
    burn_in: int = Field(2000, ge=0)
    thinning: int = Field(1, ge=1)
    # None: one independent chain per returned point
    chains: Optional[int] = Field(None, ge=1)

    model_config = ConfigDict(frozen=True)


class OptimConfig(BaseModel):
    J: int = Field(5, ge=1)
    max_iters: int = Field(200, ge=1)
    step_size: float = Field(1.0, gt=0.0)
    backoff: float = Field(0.5, gt=0.0, lt=1.0)
    max_backoffs: int = Field(30, ge=1)
    gamma: float = Field(1e-4, ge=0.0)
    restarts: int = Field(1, ge=1)
    # base-2 exponents around the initial bandwidth tried before each ascent;
    # empty starts the ascent at the initial bandwidth
    width_grid: Tuple[int, ...] = tuple(range(-7, 4))
    median_subsample: Optional[int] = Field(1000, ge=2)
    seed: int = 0

    model_config = ConfigDict(frozen=True)


class ProblemConfig(BaseModel):
    problem: ProblemKind
    n: int = Field(ge=4)
    # mean_shift dimension, rbm visible dimension
    d: Optional[int] = Field(None, ge=1)
    d_h: Optional[int] = Field(None, ge=1)
    epsilon: Optional[float] = None
    mix_left: float = Field(0.5, gt=0.0, lt=1.0)
    seed_problem: int = 0
    gibbs: GibbsConfig = GibbsConfig()
    x_path: Optional[str] = None
    y_path: Optional[str] = None
    z_path: Optional[str] = None

    @model_validator(mode="after")
    def _check_kind_fields(self) -> "ProblemConfig":
        if self.problem == "rbm" and self.epsilon is None:
            raise ValueError("the rbm problem requires epsilon")
        if self.problem == "external" and not (self.x_path and self.y_path and self.z_path):
            raise ValueError("the external problem requires x_path, y_path and z_path")
        return self


class TrialRecord(BaseModel):
    trial_index: int
    method: MethodName
    stat: Optional[float] = None
    threshold: Optional[float] = None
    p_value: Optional[float] = None
    reject: bool = False
    degenerate: bool = False
    wall_time_seconds: Optional[float] = None
    error: Optional[str] = None

    model_config = ConfigDict(from_attributes=True)


class RunSummary(BaseModel):
    method: MethodName
    J: int
    alpha: float
    n: int
    trials: int
    rejections: int
    failures: int
    rejection_rate: float
    ci_low: float
    ci_high: float

    model_config = ConfigDict(from_attributes=True)


class TrialsReport(BaseModel):
    config: ProblemConfig
    summary: RunSummary
    records: List[TrialRecord]


class BenchRow(BaseModel):
    method: MethodName
    n: int
    reps: int
    median_seconds: float
    min_seconds: float
    max_seconds: float
    note: Optional[str] = None


class BenchReport(BaseModel):
    config: ProblemConfig
    rows: List[BenchRow]
    slopes: Dict[str, float]


class CurveRow(BaseModel):
    """One line of a figure CSV: (x, method, value, ci_low, ci_high)."""

    x: float
    method: str
    value: float
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None


# Service bodies


class TrialsRequest(BaseModel):
    problem: ProblemConfig
    method: MethodName
    J: int = Field(5, ge=1)
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    trials: int = Field(10, ge=1, le=1000)
    seed: int = 0
    train_frac: float = Field(0.2, gt=0.0, lt=1.0)


class PoolScoreRequest(BaseModel):
    problem: ProblemConfig
    criterion: CriterionKind = "ume"
    pool: List[List[float]] = Field(min_length=1)
    sigma2: Optional[float] = Field(None, gt=0.0)
    gamma: float = Field(1e-4, ge=0.0)
    seed: int = 0


class PoolScoreResponse(BaseModel):
    scores: List[float]
    degenerate: List[bool]
    descending: List[int]
    sigma2: float


class RunSchema(BaseModel):
    id: int
    created_at: datetime
    problem: str
    method: str
    J: int
    alpha: float
    n: int
    trials: int
    rejections: int
    failures: int
    rejection_rate: float
    ci_low: float
    ci_high: float
    config: Optional[Any] = None

    model_config = ConfigDict(from_attributes=True)


def finite_or_none(value: Optional[float]) -> Optional[float]:
    """JSON has no infinities; map them to null."""
    if value is None or not math.isfinite(value):
        return None
    return value


class TrialsGridReport(BaseModel):
    """Every (n, epsilon, method, J) cell of one `trials` invocation."""

    runs: List[TrialsReport]


class LocationReport(BaseModel):
    """Locations with their criterion values and the held-out test they fed.

    Only interpretable when the held-out test rejects H0.
    """

    config: ProblemConfig
    criterion: CriterionKind
    locations: List[List[float]]
    indices: List[int]
    values: List[float]
    sigma2: float
    test: TestResult
    scores: Optional[List[float]] = None
    degenerate: Optional[List[bool]] = None
    exhausted: bool = False
    stalled: bool = False

    @property
    def interpretable(self) -> bool:
        return self.test.reject
