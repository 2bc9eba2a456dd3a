# relgof/routers/ingestion/pool_scores.py

import logging

import numpy as np
from fastapi import APIRouter, HTTPException
from fastapi.concurrency import run_in_threadpool

from relgof import schemas
from relgof.harness.curves import default_sigma2, make_criterion
from relgof.harness.problems import build_problem
from relgof.stats.errors import RelGofError
from relgof.stats.kernels import KernelSpec
from relgof.stats.tuning import score_candidate_pool

router = APIRouter(
    prefix="/pool-scores",
    tags=["pool-scores"]
)

logger = logging.getLogger(__name__)


def score_pool(request: schemas.PoolScoreRequest) -> schemas.PoolScoreResponse:
    problem = build_problem(request.problem)
    X, Y, Z = problem.sample_triple(request.problem.n, request.seed)
    criterion = make_criterion(request.criterion, problem, X, Y, Z)
    sigma2 = request.sigma2 or default_sigma2(request.criterion, X, Y, Z, seed=request.seed)
    scores = score_candidate_pool(np.asarray(request.pool, dtype=np.float64), criterion, KernelSpec(sigma2), request.gamma)
    return schemas.PoolScoreResponse(
        scores=scores.scores.tolist(),
        degenerate=scores.degenerate.tolist(),
        descending=[int(i) for i in scores.ranking(descending=True)],
        sigma2=sigma2,
    )


@router.post("/", response_model=schemas.PoolScoreResponse)
async def submit_pool_scores(request: schemas.PoolScoreRequest):
    """Score each candidate location of the pool on one drawn data set."""
    logger.debug(f"Scoring {len(request.pool)} candidates with the {request.criterion} criterion.")
    try:
        return await run_in_threadpool(score_pool, request)
    except RelGofError as e:
        logger.warning(f"Rejected pool-score request: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Pool scoring failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail="Internal Server Error")
