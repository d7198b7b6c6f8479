"""Numerical verification of the Green's-function identities behind the
modified Langevin-noise description of absorbing scatterers in vacuum."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    CoincidenceError,
    ConfigError,
    ConvergenceFailure,
    CoverageError,
    DomainError,
    InvalidArgumentError,
    MlnfError,
    ModelViolationError,
    SurfaceAmbiguityError,
    TruncationError,
)
from .reports import IdentityReport

__all__ = [
    "__version__",
    "IdentityReport",
    "MlnfError",
    "InvalidArgumentError",
    "DomainError",
    "ConvergenceFailure",
    "ModelViolationError",
    "CoverageError",
    "CoincidenceError",
    "SurfaceAmbiguityError",
    "TruncationError",
    "ConfigError",
]
