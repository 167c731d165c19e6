"""Boundary-triplet classification and simulation of 1-D port-Hamiltonian systems."""

from .errors import (
    ConfigError,
    NotDissipativeError,
    PHSError,
    RankError,
    SingularMatrixError,
    ValidationError,
)
from .numerics import DEFAULT_TOL, Tolerances

__all__ = [
    "ConfigError",
    "DEFAULT_TOL",
    "NotDissipativeError",
    "PHSError",
    "RankError",
    "SingularMatrixError",
    "Tolerances",
    "ValidationError",
]

__version__ = "0.1.0"
