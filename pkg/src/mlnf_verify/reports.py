"""Identity report container and residual helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


def relative_residual(lhs, rhs) -> float:
    """Entrywise-max residual normalized by the larger entrywise-max magnitude.

    Returns 0 when both sides vanish identically.
    """
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    scale = max(float(np.max(np.abs(lhs), initial=0.0)), float(np.max(np.abs(rhs), initial=0.0)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(lhs - rhs))) / scale


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of one verified identity.

    Attributes
    ----------
    name : str
        Check name.
    parameters : dict
        JSON-serializable description of the inputs.
    residual : float
        Final relative residual.
    tolerance : float
        Pass threshold.
    converged : bool
        True iff the residual is within tolerance and the sweep is sane.
    sweep : list of (level, residual)
        Residual at each refinement level, recorded verbatim.
    details : dict
        Extra diagnostics (split terms, auxiliary residuals, notes).
    """

    name: str
    parameters: dict[str, Any]
    residual: float
    tolerance: float
    converged: bool
    sweep: list[tuple[int, float]] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.converged

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "parameters": _jsonable(self.parameters),
            "residual": _jsonable(self.residual),
            "tolerance": self.tolerance,
            "converged": self.converged,
            "sweep": [[int(level), _jsonable(r)] for level, r in self.sweep],
            "details": _jsonable(self.details),
        }


def sweep_is_sane(sweep: Sequence[tuple[int, float]], tolerance: float) -> bool:
    """False when a residual jumps up by more than 10x above the tolerance."""
    values = [r for _, r in sweep]
    for prev, cur in zip(values, values[1:]):
        if not math.isfinite(cur):
            return False
        if cur > 10.0 * prev and cur > tolerance:
            return False
    return True


def make_report(
    name: str,
    parameters: dict[str, Any],
    sweep: Sequence[tuple[int, float]],
    tolerance: float,
    details: dict[str, Any] | None = None,
    *,
    residual: float | None = None,
    extra_ok: bool = True,
) -> IdentityReport:
    """Build a report whose residual is the last sweep entry unless given."""
    sweep = [(int(level), float(r)) for level, r in sweep]
    if residual is None:
        residual = sweep[-1][1] if sweep else math.inf
    residual = float(residual)
    converged = (
        extra_ok
        and math.isfinite(residual)
        and residual <= tolerance
        and sweep_is_sane(sweep, tolerance)
    )
    return IdentityReport(name, dict(parameters), residual, float(tolerance), bool(converged),
                          sweep, dict(details or {}))


def failed_report(name: str, parameters: dict[str, Any], tolerance: float, error: Exception) -> IdentityReport:
    """Report for a check whose evaluation raised."""
    return IdentityReport(name, dict(parameters), math.inf, float(tolerance), False, [],
                          {"error": f"{type(error).__name__}: {error}"})


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        if math.isfinite(v):
            return v
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x
