"""Exception hierarchy shared by the engine and the CLI."""
from typing import Optional


class NormcharError(Exception):
    """Base class for every failure raised by the engine."""


class BoundedInputError(NormcharError, ValueError):
    """An order, size or count is outside the supported range."""


class InputError(NormcharError, ValueError):
    """Structurally invalid input (labels, coefficients, grids, shapes)."""


class NondegeneracyError(NormcharError):
    """A variable required to be nondegenerate has zero variance."""


class InsufficientSampleError(NormcharError):
    """Too few observations for the requested estimate."""


class ParseError(NormcharError):
    """Malformed input file. Carries the 1-based line/column when known."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:{column if column is not None else 0}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")
