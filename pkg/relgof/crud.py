# relgof/crud.py

from typing import List, Optional

from sqlalchemy import select
from sqlalchemy.ext.asyncio import AsyncSession

from relgof import models
from relgof.schemas import TrialsReport


async def create_run(db: AsyncSession, report: TrialsReport) -> models.Run:
    s = report.summary
    run = models.Run(
        problem=report.config.problem,
        method=s.method,
        J=s.J,
        alpha=s.alpha,
        n=s.n,
        trials=s.trials,
        rejections=s.rejections,
        failures=s.failures,
        rejection_rate=s.rejection_rate,
        ci_low=s.ci_low,
        ci_high=s.ci_high,
        config=report.config.model_dump(mode="json"),
    )
    run.records = [models.TrialRecordRow(**record.model_dump()) for record in report.records]
    db.add(run)
    await db.commit()
    await db.refresh(run)
    return run


async def get_run(db: AsyncSession, run_id: int) -> Optional[models.Run]:
    result = await db.execute(select(models.Run).filter(models.Run.id == run_id))
    return result.scalar_one_or_none()


async def list_runs(db: AsyncSession, limit: int = 100, offset: int = 0) -> List[models.Run]:
    result = await db.execute(select(models.Run).order_by(models.Run.id).offset(offset).limit(limit))
    return list(result.scalars().all())


async def get_records(db: AsyncSession, run_id: int) -> List[models.TrialRecordRow]:
    result = await db.execute(
        select(models.TrialRecordRow)
        .filter(models.TrialRecordRow.run_id == run_id)
        .order_by(models.TrialRecordRow.trial_index)
    )
    return list(result.scalars().all())
