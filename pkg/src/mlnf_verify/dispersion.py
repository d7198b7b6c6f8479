"""Causal Lorentz-pole material models and dispersion-side identities.

The susceptibilities are finite sums of Lorentz poles,

    chi(w) = sum_p wp^2 / (w0^2 - w^2 - i gamma w),

with ``eps = 1 + chi_e`` and ``mu = 1 / (1 - chi_m)``.  The time-domain
response uses the convention ``chi(w) = (1/2pi) int_0^inf exp(i w t) chi(t) dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .errors import CoverageError, InvalidArgumentError, ModelViolationError
from .numerics import CONSTANTS, PhysicalConstants, line_integrate_regularized
from .reports import IdentityReport, make_report

__all__ = [
    "LorentzPole",
    "DispersionModel",
    "Material",
    "VACUUM",
    "susceptibility",
    "epsilon",
    "mu",
    "coupling_alpha",
    "coupling_beta",
    "chi_time_domain",
    "chi_time_derivative",
    "verify_kramers_kronig",
    "verify_coupling_identity",
]


@dataclass(frozen=True)
class LorentzPole:
    """One Lorentz oscillator (all frequencies in rad/s)."""

    omega0: float
    omegap: float
    gamma: float

    def __post_init__(self):
        if not (self.omega0 >= 0 and math.isfinite(self.omega0)):
            raise InvalidArgumentError("omega0 must be finite and >= 0")
        if not (self.omegap > 0 and math.isfinite(self.omegap)):
            raise InvalidArgumentError("omegap must be finite and > 0")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise InvalidArgumentError("gamma must be finite and > 0")

    def chi(self, omega):
        return self.omegap**2 / (self.omega0**2 - omega**2 - 1j * self.gamma * omega)

    def scaled(self, factor: float) -> "LorentzPole":
        return LorentzPole(self.omega0 * factor, self.omegap * factor, self.gamma * factor)


@dataclass(frozen=True)
class DispersionModel:
    """Electric and magnetic Lorentz-pole lists."""

    eps_poles: tuple[LorentzPole, ...] = ()
    mu_poles: tuple[LorentzPole, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "eps_poles", tuple(self.eps_poles))
        object.__setattr__(self, "mu_poles", tuple(self.mu_poles))

    def poles(self, kind: str) -> tuple[LorentzPole, ...]:
        if kind in ("eps", "e", "epsilon"):
            return self.eps_poles
        if kind in ("mu", "m"):
            return self.mu_poles
        raise InvalidArgumentError(f"unknown response kind {kind!r}")

    @classmethod
    def matched(cls, omega: float, eps: complex = 1.0, mu: complex = 1.0) -> "DispersionModel":
        """Single-pole model reproducing given ``eps`` and ``mu`` at ``omega``.

        Any passive target (``Im eps > 0``, ``Im(-1/mu) > 0``) can be hit exactly
        by one Lorentz pole; ``eps == 1`` or ``mu == 1`` yield no pole.
        """
        if not omega > 0:
            raise InvalidArgumentError("omega must be positive")
        eps_poles = () if complex(eps) == 1 else (_matched_pole(omega, complex(eps) - 1.0),)
        mu_poles = () if complex(mu) == 1 else (_matched_pole(omega, 1.0 - 1.0 / complex(mu)),)
        return cls(eps_poles, mu_poles)


def _matched_pole(omega: float, chi: complex) -> LorentzPole:
    if chi.imag <= 0:
        raise ModelViolationError(f"target susceptibility {chi} is not passive")
    inv = 1.0 / chi
    # w0^2 - w^2 - i g w = wp^2 / chi; wp is free, pick it so w0^2 is 2 w^2, w^2 or w^2 / 2
    denom_re, denom_im = inv.real, inv.imag
    if denom_re > 0:
        wp2 = omega**2 / denom_re
    elif denom_re < 0:
        wp2 = omega**2 / (2.0 * abs(denom_re))
    else:
        wp2 = omega**2
    w02 = omega**2 + wp2 * denom_re
    gamma = -wp2 * denom_im / omega
    return LorentzPole(math.sqrt(w02), math.sqrt(wp2), gamma)


@dataclass(frozen=True)
class Material:
    """A dispersive material, or vacuum when ``model`` is None."""

    model: DispersionModel | None = None

    @property
    def is_vacuum(self) -> bool:
        return self.model is None


VACUUM = Material(None)


def _check_omega(omega):
    w = np.asarray(omega)
    if np.iscomplexobj(w):
        real_axis = w.imag == 0
        if np.any(real_axis & (w.real <= 0)):
            raise InvalidArgumentError("real frequencies must be positive")
    elif np.any(w <= 0):
        raise InvalidArgumentError("frequencies must be positive")
    return w


def susceptibility(material: Material, omega, kind: str = "eps"):
    """Susceptibility ``chi(omega)`` of the electric or magnetic poles.

    Complex ``omega`` off the real axis is accepted (upper half plane and its
    reflection), which is how the reflection principle is exercised.
    """
    w = _check_omega(omega)
    if material.is_vacuum:
        return np.zeros_like(w, dtype=complex) if np.ndim(w) else 0j
    total = np.zeros_like(w, dtype=complex)
    for p in material.model.poles(kind):
        total = total + p.chi(w)
    return total if np.ndim(w) else complex(total)


def epsilon(material: Material, omega):
    """Relative permittivity ``1 + chi_e``; exactly 1 for vacuum."""
    return 1.0 + susceptibility(material, omega, "eps")


def mu(material: Material, omega):
    """Relative permeability ``1 / (1 - chi_m)``; exactly 1 for vacuum."""
    return 1.0 / (1.0 - susceptibility(material, omega, "mu"))


def coupling_alpha(material: Material, omega, constants: PhysicalConstants = CONSTANTS):
    """Electric reservoir coupling ``sqrt(2 eps0 w Im eps / pi)``."""
    im = np.imag(epsilon(material, omega))
    if np.any(im < 0):
        raise ModelViolationError("Im eps < 0: model is not passive")
    return np.sqrt(2.0 * constants.eps0 * np.asarray(omega) * im / math.pi)


def coupling_beta(material: Material, omega, constants: PhysicalConstants = CONSTANTS):
    """Magnetic reservoir coupling ``sqrt(2 w Im(-1/mu) / (pi mu0))``."""
    im = np.imag(-1.0 / mu(material, omega))
    if np.any(im < 0):
        raise ModelViolationError("Im(-1/mu) < 0: model is not passive")
    return np.sqrt(2.0 * np.asarray(omega) * im / (math.pi * constants.mu0))


def _pole_time(p: LorentzPole, tau: np.ndarray, derivative: bool) -> np.ndarray:
    disc = p.omega0**2 - 0.25 * p.gamma**2
    damp = np.exp(-0.5 * p.gamma * tau)
    if disc > 0:
        wt = math.sqrt(disc)
        s, c = np.sin(wt * tau), np.cos(wt * tau)
    elif disc < 0:
        wt = math.sqrt(-disc)
        s, c = np.sinh(wt * tau), np.cosh(wt * tau)
    else:
        wt = None
    if wt is None:
        if derivative:
            return 2 * math.pi * p.omegap**2 * damp * (1.0 - 0.5 * p.gamma * tau)
        return 2 * math.pi * p.omegap**2 * damp * tau
    if derivative:
        return 2 * math.pi * p.omegap**2 / wt * damp * (wt * c - 0.5 * p.gamma * s)
    return 2 * math.pi * p.omegap**2 / wt * damp * s


def _time_response(material: Material, tau, kind: str, derivative: bool):
    t = np.asarray(tau, dtype=float)
    out = np.zeros_like(t)
    if not material.is_vacuum:
        pos = t > 0
        tp = np.where(pos, t, 0.0)
        for p in material.model.poles(kind):
            out = out + np.where(pos, _pole_time(p, tp, derivative), 0.0)
    return out if out.ndim else float(out)


def chi_time_domain(material: Material, tau, kind: str = "eps"):
    """Causal time-domain susceptibility.

    ``chi(t) = 2 pi sum wp^2/wt exp(-gamma t / 2) sin(wt t)`` for ``t > 0`` with
    ``wt = sqrt(w0^2 - gamma^2/4)`` (hyperbolic branch when overdamped), and
    zero for ``t <= 0``.
    """
    return _time_response(material, tau, kind, derivative=False)


def chi_time_derivative(material: Material, tau, kind: str = "eps"):
    """``d chi / d t``, zero for ``t <= 0``."""
    return _time_response(material, tau, kind, derivative=True)


# ---------------------------------------------------------------------------
# Kramers-Kronig


def _im_chi_and_slope(poles: Sequence[LorentzPole], w: float):
    val = 0.0
    slope = 0.0
    for p in poles:
        d = (p.omega0**2 - w**2) ** 2 + (p.gamma * w) ** 2
        dd = -4.0 * w * (p.omega0**2 - w**2) + 2.0 * p.gamma**2 * w
        val += p.omegap**2 * p.gamma * w / d
        slope += p.omegap**2 * p.gamma * (d - w * dd) / d**2
    return val, slope


def _kk_real_part(poles: Sequence[LorentzPole], w: float, pv_epsilon: float, rtol: float) -> float:
    """``(2/pi) PV int_0^inf w' Im chi(w') / (w'^2 - w^2) dw'``."""

    def g(x):
        return _im_chi_and_slope(poles, x)[0] * x / (x + w)

    lo, hi = w - pv_epsilon, w + pv_epsilon
    top = 1e3 * max([w] + [p.omega0 + p.gamma for p in poles])
    marks = sorted({p.omega0 for p in poles} | {0.5 * w, 2 * w})
    total = 0.0
    for a, b in ((0.0, lo), (hi, top)):
        pts = [m for m in marks if a < m < b]
        val, _ = integrate.quad(lambda x: g(x) / (x - w), a, b, points=pts or None,
                                limit=1000, epsabs=0.0, epsrel=rtol)
        total += val
    im0, slope0 = _im_chi_and_slope(poles, w)
    # window with Im chi linearized: PV of g/(x - w) over |x - w| < eps equals 2 eps g'(w)
    gprime = ((im0 + w * slope0) * 2 * w - w * im0) / (2 * w) ** 2
    total += 2.0 * pv_epsilon * gprime
    total += sum(p.omegap**2 * p.gamma for p in poles) / (3.0 * top**3)
    return 2.0 / math.pi * total


def verify_kramers_kronig(material: Material, omega_grid, pv_epsilon: float,
                          *, tolerance: float = 1e-5, refinements: int = 3) -> IdentityReport:
    """Compare ``Re chi`` with its Kramers-Kronig reconstruction from ``Im chi``.

    The residual is the max deviation over the grid divided by the max
    ``|chi|`` on the grid.  The sweep halves ``pv_epsilon`` and tightens the
    quadrature tolerance at each level.

    Raises
    ------
    CoverageError
        If the grid does not bracket every pole frequency.
    """
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
        raise InvalidArgumentError("omega_grid must be a non-empty list of positive frequencies")
    if not pv_epsilon > 0:
        raise InvalidArgumentError("pv_epsilon must be positive")
    params = {"omega_grid": grid.tolist(), "pv_epsilon": pv_epsilon}
    if material.is_vacuum:
        return make_report("kramers_kronig", params, [(0, 0.0)], tolerance,
                           {"note": "vacuum: both sides vanish identically"})
    kinds = [k for k in ("eps", "mu") if material.model.poles(k)]
    for kind in kinds:
        w0 = [p.omega0 for p in material.model.poles(kind)]
        if grid.min() >= min(w0) or grid.max() <= max(w0):
            raise CoverageError(
                f"omega grid [{grid.min():.3e}, {grid.max():.3e}] does not bracket the "
                f"{kind} poles at {w0}")
    sweep = []
    for level in range(refinements):
        eps_l = pv_epsilon / 2**level
        rtol = 1e-10 / 10**level
        worst = 0.0
        for kind in kinds:
            poles = material.model.poles(kind)
            chi = susceptibility(material, grid, kind)
            scale = float(np.max(np.abs(chi)))
            recon = np.array([_kk_real_part(poles, float(w), eps_l * float(w), rtol) for w in grid])
            worst = max(worst, float(np.max(np.abs(recon - chi.real))) / scale)
        sweep.append((level, worst))
    return make_report("kramers_kronig", params, sweep, tolerance, {"kinds": kinds})


# ---------------------------------------------------------------------------
# reservoir coupling identity


def verify_coupling_identity(material: Material, tau_values: Iterable[float], *,
                             tolerance: float = 1e-4,
                             constants: PhysicalConstants = CONSTANTS) -> IdentityReport:
    """Check ``int_0^inf alpha^2 cos(W t) dW = (eps0/2pi)[chi'(t) + chi'(-t)]``.

    The magnetic analogue uses ``beta^2`` and ``1/(2 pi mu0)``.  The left side
    is an Abel-regularized line integral; the right side is the closed-form
    derivative of :func:`chi_time_domain`.  Residuals are normalized by the
    largest magnitude over all ``tau`` values.
    """
    taus = [float(t) for t in tau_values]
    if not taus or any(t == 0 for t in taus):
        raise InvalidArgumentError("tau values must be non-empty and nonzero")
    params = {"tau_values": taus}
    if material.is_vacuum:
        return make_report("coupling_identity", params, [(0, 0.0)], tolerance,
                           {"note": "vacuum: both sides vanish identically"})
    kinds = [k for k in ("eps", "mu") if material.model.poles(k)]
    worst_by_level: dict[int, float] = {}
    details = {}
    for kind in kinds:
        poles = material.model.poles(kind)
        wscale = max(p.omega0 + p.gamma for p in poles)
        pref = constants.eps0 / (2 * math.pi) if kind == "eps" else 1.0 / (2 * math.pi * constants.mu0)
        if kind == "eps":
            def weight(w):
                return 2.0 * constants.eps0 * w * np.imag(epsilon(material, w)) / math.pi
        else:
            def weight(w):
                return 2.0 * w * np.imag(-1.0 / mu(material, w)) / (math.pi * constants.mu0)
        lhs_levels: dict[int, list[float]] = {}
        rhs = []
        for t in taus:
            rhs.append(pref * (chi_time_derivative(material, t, kind)
                               + chi_time_derivative(material, -t, kind)))
            for level, cut in enumerate((400.0, 800.0)):
                # integrate in the scaled variable x = w / wscale
                def f(x, t=t):
                    w = x * wscale
                    return weight(w) * np.cos(w * t) * wscale

                res = line_integrate_regularized(
                    f, [0.08, 0.04, 0.02, 0.01], cut,
                    breakpoints=[p.omega0 / wscale for p in poles], panels=256, rtol=1e-12)
                lhs_levels.setdefault(level, []).append(float(np.real(res.value)))
        rhs = np.asarray(rhs)
        for level, lhs in lhs_levels.items():
            lhs = np.asarray(lhs)
            scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
            r = float(np.max(np.abs(lhs - rhs))) / scale if scale else 0.0
            worst_by_level[level] = max(worst_by_level.get(level, 0.0), r)
        details[kind] = {"lhs": lhs_levels[max(lhs_levels)], "rhs": rhs.tolist()}
    sweep = sorted(worst_by_level.items())
    return make_report("coupling_identity", params, sweep, tolerance, details)
