# alembic/env.py

import asyncio
import os
import sys
from logging.config import fileConfig

from alembic import context
from sqlalchemy import pool
from sqlalchemy.ext.asyncio import async_engine_from_config

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# relgof.config loads .env and rewrites postgresql:// to the asyncpg driver
from relgof.config import DATABASE_URL
from relgof import models  # noqa: F401  registers tables on Base
from relgof.database import Base

config = context.config
config.set_main_option('sqlalchemy.url', DATABASE_URL)

if config.config_file_name is not None:
    fileConfig(config.config_file_name)

target_metadata = Base.metadata


def _owned_by_relgof(obj, name, type_, reflected, compare_to):
    # a shared database may hold tables that are not ours
    if type_ == "table" and reflected and compare_to is None:
        return name in target_metadata.tables
    return True


def _context_options(sqlite: bool) -> dict:
    return {
        "target_metadata": target_metadata,
        "compare_type": True,
        "include_object": _owned_by_relgof,
        # sqlite cannot ALTER most constraints in place
        "render_as_batch": sqlite,
    }


def run_migrations_offline():
    context.configure(
        url=DATABASE_URL,
        literal_binds=True,
        dialect_opts={"paramstyle": "named"},
        **_context_options(DATABASE_URL.startswith("sqlite")),
    )
    with context.begin_transaction():
        context.run_migrations()


def do_run_migrations(connection):
    context.configure(connection=connection, **_context_options(connection.dialect.name == "sqlite"))
    with context.begin_transaction():
        context.run_migrations()


async def run_async_migrations():
    engine = async_engine_from_config(
        config.get_section(config.config_ini_section),
        prefix='sqlalchemy.',
        poolclass=pool.NullPool,
    )
    async with engine.connect() as connection:
        await connection.run_sync(do_run_migrations)
    await engine.dispose()


if context.is_offline_mode():
    run_migrations_offline()
else:
    asyncio.run(run_async_migrations())
