# relgof/routers/ingestion/trials.py

import logging

from fastapi import APIRouter, Depends, HTTPException
from fastapi.concurrency import run_in_threadpool
from pydantic import ValidationError
from sqlalchemy.ext.asyncio import AsyncSession

from relgof import crud, schemas
from relgof.database import get_db
from relgof.harness.trials import run_trials
from relgof.stats.errors import RelGofError

router = APIRouter(
    prefix="/trials",
    tags=["trials"]
)

logger = logging.getLogger(__name__)


@router.post("/", response_model=schemas.RunSchema)
async def submit_trials(request: schemas.TrialsRequest, db: AsyncSession = Depends(get_db)):
    """Run a batch of trials and store the run with every trial record."""
    logger.info(f"Starting {request.trials} trials of {request.method} on {request.problem.problem}.")
    try:
        report = await run_in_threadpool(
            run_trials,
            request.problem,
            request.method,
            J=request.J,
            alpha=request.alpha,
            trials=request.trials,
            seed_base=request.seed,
            train_frac=request.train_frac,
        )
    except (RelGofError, ValidationError) as e:
        logger.warning(f"Rejected trials request: {e}")
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Trials run failed: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail="Internal Server Error")

    run = await crud.create_run(db, report)
    logger.info(f"Stored run {run.id}: rejection rate {run.rejection_rate:.3f}")
    return run
