import os
import tempfile

import pytest

# The service reads DATABASE_URL when relgof.config is first imported.
_DB_DIR = tempfile.mkdtemp(prefix="relgof-tests-")
os.environ["DATABASE_URL"] = f"sqlite+aiosqlite:///{_DB_DIR}/relgof.db"
os.environ.setdefault("RELGOF_WORKERS", "1")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte-Carlo checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
