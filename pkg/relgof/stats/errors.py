# relgof/stats/errors.py

from typing import Any, Optional


class RelGofError(Exception):
    """Base class of every error raised by the library."""


class InputError(RelGofError, ValueError):
    pass


class DegenerateSampleError(RelGofError, ValueError):
    pass


class EvaluationError(RelGofError, ArithmeticError):
    pass


class OptimizationError(RelGofError, RuntimeError):
    """Gradient ascent could not produce a finite objective.

    `state` holds the last parameters with a finite objective.
    """

    def __init__(self, message: str, state: Optional[Any] = None):
        super().__init__(message)
        self.state = state


class MatrixParseError(InputError):
    def __init__(self, path: str, line: int, column: int, reason: str):
        super().__init__(f"{path}: line {line}, column {column}: {reason}")
        self.path = path
        self.line = line
        self.column = column
