"""Mutually unbiased bases in C^6: verification, classification and search tools."""
__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConstructionError,
    DimensionError,
    DomainError,
    InconsistencyError,
    MatrixParseError,
    MublabError,
    NormalizationError,
)
from .validation import DEFAULT_TOL, Tolerance  # noqa: E402

__all__ = [
    "ConstructionError", "DimensionError", "DomainError", "InconsistencyError",
    "MatrixParseError", "MublabError", "NormalizationError", "DEFAULT_TOL", "Tolerance",
]
