# relgof/main.py

from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from relgof.config import LOG_LEVEL, configure_logging
from relgof import models  # noqa: F401  registers tables on Base
from relgof.database import Base, engine
from relgof.routers.ingestion import pool_scores, trials
from relgof.routers.retrieval import runs


@asynccontextmanager
async def lifespan(app: FastAPI):
    configure_logging(LOG_LEVEL)
    # Startup code: create missing tables
    async with engine.begin() as conn:
        await conn.run_sync(Base.metadata.create_all)
    yield
    # Shutdown code: dispose engine
    await engine.dispose()


app = FastAPI(title="relgof", lifespan=lifespan)


app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include ingestion routers
app.include_router(trials.router)
app.include_router(pool_scores.router)

# Include retrieval routers
app.include_router(runs.router)
