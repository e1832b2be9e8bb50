"""Quantum operator-valued kernels: construction, swap-test simulation and channel estimation."""

from .clinalg import DEFAULT_TOL, Tolerance
from .errors import (DomainError, PostSelectionError, QovkError, ReconstructionError,
                     ShapeError, SingularityError, SizeError, ValidityError)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL", "Tolerance", "QovkError", "ShapeError", "DomainError", "SizeError",
    "SingularityError", "PostSelectionError", "ValidityError", "ReconstructionError",
]
