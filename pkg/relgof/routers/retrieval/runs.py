# relgof/routers/retrieval/runs.py

import logging
from typing import List

from fastapi import APIRouter, Depends, HTTPException, Query
from sqlalchemy.ext.asyncio import AsyncSession

from relgof import crud, schemas
from relgof.database import get_db

router = APIRouter(
    prefix="/runs",
    tags=["runs"]
)

logger = logging.getLogger(__name__)


@router.get("/", response_model=List[schemas.RunSchema])
async def get_runs(
    db: AsyncSession = Depends(get_db),
    limit: int = Query(100, ge=1, le=1000),
    offset: int = Query(0, ge=0)
):
    """
    Retrieve stored runs, oldest first.
    """
    try:
        return await crud.list_runs(db, limit=limit, offset=offset)
    except Exception as e:
        logger.error(f"Error fetching runs: {e}", exc_info=True)
        raise HTTPException(status_code=500, detail="Internal Server Error")


@router.get("/{run_id}", response_model=schemas.RunSchema)
async def get_run_by_id(run_id: int, db: AsyncSession = Depends(get_db)):
    run = await crud.get_run(db, run_id)
    if not run:
        raise HTTPException(status_code=404, detail="Run not found")
    return run


@router.get("/{run_id}/records", response_model=List[schemas.TrialRecord])
async def get_run_records(run_id: int, db: AsyncSession = Depends(get_db)):
    """
    Retrieve the trial records of a run, ordered by trial index.
    """
    if not await crud.get_run(db, run_id):
        raise HTTPException(status_code=404, detail="Run not found")
    return await crud.get_records(db, run_id)
