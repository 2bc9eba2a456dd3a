# relgof/harness/matrix_io.py

"""Reading and writing sample matrices and result files."""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from relgof.schemas import CurveRow
from relgof.stats.errors import InputError, MatrixParseError

logger = logging.getLogger(__name__)


def _load_csv(path: Path) -> np.ndarray:
    rows = []
    width = None
    with path.open(newline="") as fh:
        for line_no, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            values = []
            for col_no, cell in enumerate(record, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise MatrixParseError(str(path), line_no, col_no, f"not a number: {cell!r}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise MatrixParseError(
                    str(path), line_no, len(values), f"expected {width} columns, found {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise MatrixParseError(str(path), 1, 1, "file holds no rows")
    return np.asarray(rows, dtype=np.float64)


def _load_npy(path: Path) -> np.ndarray:
    try:
        data = np.load(path, allow_pickle=False)
    except ValueError as e:
        raise MatrixParseError(str(path), 1, 1, f"not a valid .npy matrix: {e}") from None
    if data.ndim != 2:
        raise MatrixParseError(str(path), 1, 1, f"expected a 2-d matrix, found shape {data.shape}")
    return data.astype(np.float64, copy=False)


def load_matrix(path) -> np.ndarray:
    """Rows are observations, columns are features. `.npy` or `.csv`."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"matrix file not found: {path}")
    data = _load_npy(path) if path.suffix == ".npy" else _load_csv(path)
    logger.debug(f"Loaded {data.shape[0]} x {data.shape[1]} matrix from {path}")
    return data


def save_matrix(path, matrix) -> None:
    path = Path(path)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise InputError(f"expected a 2-d matrix, got shape {matrix.shape}")
    if path.suffix == ".npy":
        np.save(path, matrix, allow_pickle=False)
    else:
        # repr round-trips float64 exactly
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            for row in matrix:
                writer.writerow([repr(float(v)) for v in row])


def load_triple(x_path, y_path, z_path):
    """Three matrices that must share their column count."""
    X, Y, Z = load_matrix(x_path), load_matrix(y_path), load_matrix(z_path)
    for name, M in (("X", X), ("Y", Y)):
        if M.shape[1] != Z.shape[1]:
            raise InputError(
                f"dimension mismatch: {name} has {M.shape[1]} columns but Z has {Z.shape[1]}"
            )
    return X, Y, Z


def save_results(path, payload) -> None:
    """Write a pydantic model (records plus config echo) as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = payload.model_dump_json(indent=2) if hasattr(payload, "model_dump_json") else json.dumps(payload, indent=2)
    path.write_text(text)
    logger.info(f"Wrote results to {path}")


def write_curve_csv(path, rows: Iterable[CurveRow]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def cell(v: Optional[float]) -> str:
        return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(v)

    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "method", "value", "ci_low", "ci_high"])
        for row in rows:
            writer.writerow([cell(row.x), row.method, cell(row.value), cell(row.ci_low), cell(row.ci_high)])
    logger.info(f"Wrote curve CSV to {path}")
