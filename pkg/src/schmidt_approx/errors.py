"""Exception hierarchy shared by the library and the command line."""

from __future__ import annotations


class SchmidtError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SchmidtError, ValueError):
    """Shapes or dimensions do not fit the operation."""


class NotHermitianError(SchmidtError, ValueError):
    pass


class SingularFactorError(SchmidtError, ValueError):
    """A 2x2 factor (or the scalar coefficient) cannot be inverted."""

    def __init__(self, message: str, factor_index: int | None = None):
        super().__init__(message)
        self.factor_index = factor_index


class SizeGuardError(SchmidtError, ValueError):
    """Requested object would exceed a dense-size guard."""


class FormatError(SchmidtError, ValueError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.path = path
