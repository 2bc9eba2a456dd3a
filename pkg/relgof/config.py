# relgof/config.py

import logging
import os

from dotenv import load_dotenv

load_dotenv()  # Load environment variables from .env file

DATABASE_URL = os.getenv("DATABASE_URL", "sqlite+aiosqlite:///./relgof.db")

if DATABASE_URL.startswith("postgresql://"):
    DATABASE_URL = DATABASE_URL.replace("postgresql://", "postgresql+asyncpg://")

# Size of the process pool used for trial loops; 1 runs trials inline.
WORKERS = max(1, int(os.getenv("RELGOF_WORKERS", "1")))

LOG_LEVEL = os.getenv("RELGOF_LOG_LEVEL", "INFO").upper()


def configure_logging(level: str = LOG_LEVEL):
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
