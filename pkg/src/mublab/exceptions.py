"""Exception hierarchy shared by every mublab module."""


class MublabError(Exception):
    """Base class for all library errors."""


class DimensionError(MublabError, ValueError):
    """Operand has the wrong shape or order."""


class DomainError(MublabError, ValueError):
    """Operand is outside the domain of the operation (not unitary, not a CHM, ...)."""


class NormalizationError(DomainError):
    """Vector is not of unit norm."""


class ConstructionError(MublabError, ValueError):
    """Parameters do not yield the requested object."""


class InconsistencyError(MublabError, RuntimeError):
    """A computed result contradicts a structural fact; usually a tolerance problem."""


class MatrixParseError(MublabError, ValueError):
    """Malformed matrix JSON."""

    def __init__(self, msg, lineno=None, colno=None):
        if lineno is not None:
            msg = f"{msg} (line {lineno}, column {colno})"
        super().__init__(msg)
        self.lineno = lineno
        self.colno = colno
