"""Exception hierarchy shared by all modules."""

from __future__ import annotations

from typing import Any


class MlnfError(Exception):
    """Base class for every error raised by the package."""


class InvalidArgumentError(MlnfError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(MlnfError, ValueError):
    """A function was evaluated outside its domain (e.g. a pole)."""


class ConvergenceFailure(MlnfError, RuntimeError):
    """An iterative or extrapolated quantity failed to converge.

    Parameters
    ----------
    message : str
        Human readable description.
    partial : dict, optional
        Whatever partial data was available when the failure was detected.
    """

    def __init__(self, message: str, partial: dict[str, Any] | None = None):
        super().__init__(message)
        self.partial = dict(partial or {})


class ModelViolationError(MlnfError, ValueError):
    """A material model violates passivity or causality."""


class CoverageError(MlnfError, ValueError):
    """A sampling grid does not cover the support it must resolve."""


class CoincidenceError(MlnfError, ValueError):
    """Source and field points coincide."""


class SurfaceAmbiguityError(MlnfError, ValueError):
    """A point lies on (or numerically too close to) a material interface."""


class TruncationError(MlnfError, RuntimeError):
    """A multipole series did not converge within the maximum order.

    Parameters
    ----------
    message : str
        Human readable description.
    last_increment : float
        Relative size of the last block of terms that was added.
    """

    def __init__(self, message: str, last_increment: float):
        super().__init__(message)
        self.last_increment = float(last_increment)


class ConfigError(MlnfError, ValueError):
    """A run configuration is malformed.

    Parameters
    ----------
    message : str
        Human readable description.
    field : str, optional
        Dotted path of the offending field.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
