"""Algorithmic-probability class priors for Gaussian-process shape classification."""

from .errors import (
    CorrelationUndefined,
    EmptyShape,
    IngestInconsistent,
    LengthMismatch,
    MalformedStructure,
    NoClasses,
    NotPositiveDefinite,
    ShapePriorError,
)

__version__ = "0.1.0"

__all__ = [
    "CorrelationUndefined",
    "EmptyShape",
    "IngestInconsistent",
    "LengthMismatch",
    "MalformedStructure",
    "NoClasses",
    "NotPositiveDefinite",
    "ShapePriorError",
]
