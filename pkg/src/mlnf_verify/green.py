"""Dyadic Green's function, its curls, far-field amplitude and noise kernels.

Supported scenes are vacuum, an unbounded homogeneous medium and a single
homogeneous sphere centred at the origin in vacuum.  The Green's function
solves ``curl (1/mu) curl G - k^2 eps G = I delta``; the homogeneous-medium
closed form therefore carries an overall factor ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .dispersion import Material, epsilon, mu
from .errors import (
    CoincidenceError,
    DomainError,
    InvalidArgumentError,
    SurfaceAmbiguityError,
    TruncationError,
)
from .numerics import CONSTANTS, IDENTITY, PhysicalConstants, SolidAngle, as_vector, cross_matrix
from .vswf import initial_order, mie_coefficients, mode_indices, vsh, vswf

__all__ = [
    "Vacuum",
    "Homogeneous",
    "SphereInVacuum",
    "Geometry",
    "GreenEval",
    "FarFieldAmplitude",
    "SphereSeries",
    "medium_wavenumber",
    "vacuum_green",
    "vacuum_green_values",
    "green",
    "farfield_amplitude",
    "aux_dyadics",
    "scaled_dyadics",
    "sphere_setup",
    "TAIL_TOLERANCE",
    "MAX_ORDER",
]

TAIL_TOLERANCE = 1e-12
MAX_ORDER = 100
SURFACE_MARGIN = 1e-9


@dataclass(frozen=True)
class Vacuum:
    """Empty space."""


@dataclass(frozen=True)
class Homogeneous:
    """Unbounded homogeneous medium."""

    material: Material

    def __post_init__(self):
        if not isinstance(self.material, Material):
            raise InvalidArgumentError("material must be a Material")


@dataclass(frozen=True)
class SphereInVacuum:
    """Homogeneous sphere of radius ``radius`` (meters) centred at the origin."""

    radius: float
    material: Material

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise InvalidArgumentError("sphere radius must be positive and finite")
        if not isinstance(self.material, Material):
            raise InvalidArgumentError("material must be a Material")


Geometry = Union[Vacuum, Homogeneous, SphereInVacuum]


@dataclass(frozen=True)
class GreenEval:
    """``G(r, r')`` with ``curl_r G`` and ``G x curl_r'``."""

    value: np.ndarray
    curl_r: np.ndarray
    curl_rprime: np.ndarray


@dataclass(frozen=True)
class FarFieldAmplitude:
    """Coefficient of ``exp(i k r) / r`` in ``G(r u, r')`` as ``r -> inf``."""

    W: np.ndarray
    direction: SolidAngle


def _check_omega(omega: float) -> float:
    omega = float(omega)
    if not (omega > 0 and math.isfinite(omega)):
        raise InvalidArgumentError("omega must be positive and finite")
    return omega


def medium_wavenumber(material: Material, omega: float,
                      constants: PhysicalConstants = CONSTANTS) -> tuple[complex, complex, complex]:
    """``(k, eps, mu)`` of a material, ``k = (w/c) sqrt(eps mu)`` with ``Im k >= 0``."""
    k0 = constants.wavenumber(omega)
    if material.is_vacuum:
        return complex(k0), 1.0 + 0j, 1.0 + 0j
    e, m = complex(epsilon(material, omega)), complex(mu(material, omega))
    n = complex(np.sqrt(e * m))
    if n.imag < 0 or (n.imag == 0 and n.real < 0):
        n = -n
    return k0 * n, e, m


def vacuum_green_values(k: complex, R) -> np.ndarray:
    """Free-space ``G0`` for many separations ``R`` of shape (P, 3); returns (P, 3, 3)."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    d = np.linalg.norm(R, axis=1)
    if np.any(d == 0.0):
        raise CoincidenceError("Green's function evaluated at coincident points")
    Rh = R / d[:, None]
    s = k * d
    g = np.exp(1j * s) / (4.0 * np.pi * d)
    a = g * (1 + 1j / s - 1 / s**2)
    b = g * (-1 - 3j / s + 3 / s**2)
    return a[:, None, None] * IDENTITY[None] + b[:, None, None] * Rh[:, :, None] * Rh[:, None, :]


def vacuum_green(k: complex, R) -> GreenEval:
    """Free-space ``G0`` for separation ``R = r - r'`` and wavenumber ``k``.

    ``G0 = exp(iks)/(4 pi R) [(1 + i/s - 1/s^2) I + (-1 - 3i/s + 3/s^2) RR]``
    with ``s = k |R|``.
    """
    R = np.asarray(R, dtype=float)
    value = vacuum_green_values(k, R[None])[0]
    d = float(np.linalg.norm(R))
    g = np.exp(1j * k * d) / (4.0 * np.pi * d)
    # curl of G0 = curl(g I) since grad div g is curl-free
    curl = cross_matrix(g * (1j * k - 1.0 / d) * R / d)
    return GreenEval(value, curl, -curl)


# ---------------------------------------------------------------------------
# sphere series


@dataclass(frozen=True)
class SphereSeries:
    """Everything needed to evaluate sphere series at one frequency."""

    radius: float
    k0: float
    k1: complex
    eps: complex
    mu: complex
    is_vacuum: bool

    @property
    def x0(self) -> float:
        return self.k0 * self.radius

    @property
    def x1(self) -> complex:
        return self.k1 * self.radius

    def coefficients(self, L: int):
        return mie_coefficients(self.x0, self.eps, self.mu, L)

    def start_order(self) -> int:
        return initial_order(max(abs(self.x0), abs(self.x1)))

    def region(self, point: np.ndarray) -> str:
        r = float(np.linalg.norm(point))
        if abs(r - self.radius) <= SURFACE_MARGIN * self.radius:
            raise SurfaceAmbiguityError(
                f"point at |r| = {r!r} lies on the sphere surface (radius {self.radius!r})")
        return "in" if r < self.radius else "out"


def sphere_setup(geometry: SphereInVacuum, omega: float,
                 constants: PhysicalConstants = CONSTANTS) -> SphereSeries:
    k1, e, m = medium_wavenumber(geometry.material, omega, constants)
    k0 = constants.wavenumber(omega)
    return SphereSeries(geometry.radius, k0, k1, e, m, geometry.material.is_vacuum)


def _pair_plan(sp: SphereSeries, field_region: str, source_region: str, L: int):
    """Prefactor, per-mode coefficients and function descriptors for a region pair."""
    c = sp.coefficients(L)
    if field_region == "out" and source_region == "out":
        pref, cm, cn = 1j * sp.k0, c.tauM, c.tauN
        fld, src = ("h", sp.k0, sp.x0), ("h", sp.k0, sp.x0)
    elif field_region == "in" and source_region == "out":
        pref, cm, cn = 1j * sp.k0, c.gammaM, c.gammaN
        fld, src = ("j", sp.k1, sp.x1), ("h", sp.k0, sp.x0)
    elif field_region == "out" and source_region == "in":
        pref, cm, cn = sp.mu * 1j * sp.k1, c.deltaM, c.deltaN
        fld, src = ("h", sp.k0, sp.x0), ("j", sp.k1, sp.x1)
    else:
        pref, cm, cn = sp.mu * 1j * sp.k1, c.rhoM, c.rhoN
        fld, src = ("j", sp.k1, sp.x1), ("j", sp.k1, sp.x1)
    n, _ = mode_indices(L)
    return pref, cm[n - 1], cn[n - 1], fld, src


def _series_terms(sp: SphereSeries, r: np.ndarray, rp: np.ndarray, L: int):
    """Per-degree contributions of the scattering series, shape ``(3, L, 3, 3)``."""
    fr, sr = sp.region(r), sp.region(rp)
    pref, cm, cn, fld, src = _pair_plan(sp, fr, sr, L)
    Mf, Nf = vswf(L, fld[0], fld[1], r[None], x_norm=fld[2])
    Ms, Ns = vswf(L, src[0], src[1], rp[None], x_norm=src[2], conjugate=True)
    Mf, Nf, Ms, Ns = Mf[:, 0], Nf[:, 0], Ms[:, 0], Ns[:, 0]
    kf, ks = fld[1], src[1]

    def dy(a, b, coef):
        return np.einsum("k,ki,kj->kij", coef, a, b)

    value = pref * (dy(Mf, Ms, cm) + dy(Nf, Ns, cn))
    curl_r = pref * kf * (dy(Nf, Ms, cm) + dy(Mf, Ns, cn))
    curl_rp = -pref * ks * (dy(Mf, Ns, cm) + dy(Nf, Ms, cn))
    n, _ = mode_indices(L)
    per_degree = np.zeros((3, L, 3, 3), dtype=complex)
    for i, part in enumerate((value, curl_r, curl_rp)):
        np.add.at(per_degree[i], n - 1, part)
    return per_degree


def _direct_part(sp: SphereSeries, r, rp) -> GreenEval | None:
    fr, sr = sp.region(r), sp.region(rp)
    if fr != sr:
        return None
    if fr == "out":
        return vacuum_green(sp.k0, r - rp)
    g = vacuum_green(sp.k1, r - rp)
    return GreenEval(sp.mu * g.value, sp.mu * g.curl_r, sp.mu * g.curl_rprime)


def _tail_fraction(per_degree: np.ndarray, reference: float) -> float:
    L = per_degree.shape[-3]
    tail = per_degree[..., L // 2:, :, :].sum(axis=-3)
    scale = max(reference, float(np.max(np.abs(per_degree.sum(axis=-3)))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(tail))) / scale


def converged_series(evaluate, start: int, reference: float, lmax: int | None):
    """Run ``evaluate(L)`` (per-degree terms) with doubling ``L`` until the tail is small.

    Returns ``(summed_terms, L)``.  With an explicit ``lmax`` the series is
    evaluated once at that order without a tail test.
    """
    if lmax is not None:
        if lmax < 1:
            raise InvalidArgumentError("lmax must be >= 1")
        terms = evaluate(int(lmax))
        return terms.sum(axis=-3), int(lmax)
    L = min(start, MAX_ORDER)
    while True:
        terms = evaluate(L)
        tail = _tail_fraction(terms, reference)
        if tail < TAIL_TOLERANCE:
            return terms.sum(axis=-3), L
        if L >= MAX_ORDER:
            raise TruncationError(
                f"sphere series not converged at L = {L} (tail {tail:.3e})", tail)
        L = min(2 * L, MAX_ORDER)


def green(geometry: Geometry, omega: float, r, rprime, *, lmax: int | None = None,
          constants: PhysicalConstants = CONSTANTS) -> GreenEval:
    """Dyadic Green's function with analytic curls.

    Parameters
    ----------
    geometry : Vacuum, Homogeneous or SphereInVacuum
    omega : float
        Angular frequency (rad/s).
    r, rprime : array_like
        Field and source points (meters).
    lmax : int, optional
        Fixed sphere truncation order; adaptive when omitted.

    Raises
    ------
    CoincidenceError
        If ``r == rprime``.
    SurfaceAmbiguityError
        If a point lies on the sphere surface.
    TruncationError
        If the sphere series does not converge.
    """
    omega = _check_omega(omega)
    r, rp = as_vector(r).real, as_vector(rprime).real
    if np.array_equal(r, rp):
        raise CoincidenceError("Green's function evaluated at coincident points")
    if isinstance(geometry, Vacuum):
        return vacuum_green(constants.wavenumber(omega), r - rp)
    if isinstance(geometry, Homogeneous):
        k, _, m = medium_wavenumber(geometry.material, omega, constants)
        g = vacuum_green(k, r - rp)
        return GreenEval(m * g.value, m * g.curl_r, m * g.curl_rprime)
    if not isinstance(geometry, SphereInVacuum):
        raise InvalidArgumentError(f"unsupported geometry {geometry!r}")
    sp = sphere_setup(geometry, omega, constants)
    direct = _direct_part(sp, r, rp)
    if sp.is_vacuum:
        return vacuum_green(sp.k0, r - rp)
    ref = float(np.max(np.abs(direct.value))) if direct is not None else 0.0
    summed, _ = converged_series(lambda L: _series_terms(sp, r, rp, L), sp.start_order(), ref, lmax)
    value, curl_r, curl_rp = summed
    if direct is not None:
        value = value + direct.value
        curl_r = curl_r + direct.curl_r
        curl_rp = curl_rp + direct.curl_rprime
    return GreenEval(value, curl_r, curl_rp)


# ---------------------------------------------------------------------------
# far field


def _vacuum_w(k0: float, u: np.ndarray, rp: np.ndarray) -> np.ndarray:
    """``exp(-i k u.r') (I - uu) / 4 pi`` for directions ``u`` of shape (P, 3)."""
    phase = np.exp(-1j * k0 * (u @ rp))
    proj = IDENTITY[None] - u[:, :, None] * u[:, None, :]
    return phase[:, None, None] * proj / (4.0 * np.pi)


def _farfield_terms(sp: SphereSeries, u: np.ndarray, rp: np.ndarray, L: int) -> np.ndarray:
    """Per-degree scattering contributions to ``W`` at directions ``u``: (P, L, 3, 3)."""
    c = sp.coefficients(L)
    n, _ = mode_indices(L)
    X = vsh(L, u).X  # (K, P, 3)
    uxX = np.cross(u[None], X)
    phase_m = (-1j) ** (n + 1)
    phase_n = (-1j) ** n
    if sp.region(rp) == "out":
        cm = 1j * c.tauM / c.h0
        cn = 1j * c.tauN / c.h0
        Ms, Ns = vswf(L, "h", sp.k0, rp[None], x_norm=sp.x0, conjugate=True)
    else:
        scale = sp.mu * sp.k1 / sp.k0
        cm = 1j * scale * c.deltaM / c.h0
        cn = 1j * scale * c.deltaN / c.h0
        Ms, Ns = vswf(L, "j", sp.k1, rp[None], x_norm=sp.x1, conjugate=True)
    cm, cn = cm[n - 1] * phase_m, cn[n - 1] * phase_n
    terms = (np.einsum("k,kpi,kj->pkij", cm, X, Ms[:, 0])
             + np.einsum("k,kpi,kj->pkij", cn, uxX, Ns[:, 0]))
    out = np.zeros((u.shape[0], L, 3, 3), dtype=complex)
    np.add.at(out, (slice(None), n - 1), terms)
    return out


def farfield_amplitudes(geometry: Geometry, omega: float, directions, rprime, *,
                        lmax: int | None = None,
                        constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Vectorized ``W(o, r')`` for unit vectors ``directions`` of shape (P, 3)."""
    omega = _check_omega(omega)
    u = np.atleast_2d(np.asarray(directions, dtype=float))
    rp = as_vector(rprime).real
    k0 = constants.wavenumber(omega)
    if isinstance(geometry, Homogeneous):
        raise DomainError("no far-field amplitude in an unbounded lossy medium")
    if isinstance(geometry, Vacuum):
        return _vacuum_w(k0, u, rp)
    if not isinstance(geometry, SphereInVacuum):
        raise InvalidArgumentError(f"unsupported geometry {geometry!r}")
    sp = sphere_setup(geometry, omega, constants)
    region = sp.region(rp)
    if sp.is_vacuum:
        return _vacuum_w(k0, u, rp)
    direct = _vacuum_w(k0, u, rp) if region == "out" else np.zeros((u.shape[0], 3, 3), complex)
    ref = float(np.max(np.abs(direct), initial=0.0))

    def evaluate(L):
        # move the degree axis next to the dyadic axes expected by the tail test
        return _farfield_terms(sp, u, rp, L)

    summed, _ = converged_series(evaluate, sp.start_order(), ref, lmax)
    return direct + summed


def farfield_amplitude(geometry: Geometry, omega: float, o, rprime, *, lmax: int | None = None,
                       constants: PhysicalConstants = CONSTANTS) -> FarFieldAmplitude:
    """Far-field amplitude ``W(o, r')`` from the analytic ``r -> inf`` limit.

    ``r exp(-i k0 r) G(r u, r') -> W(o, r')``; vacuum gives
    ``exp(-i k0 u.r') (I - uu) / 4 pi``.  Sphere terms use
    ``h_n(k0 r) -> (-i)^(n+1) exp(i k0 r) / (k0 r)``.

    Raises
    ------
    DomainError
        For an unbounded homogeneous medium, where no radiation zone exists.
    """
    if not isinstance(o, SolidAngle):
        o = SolidAngle.from_vector(o)
    W = farfield_amplitudes(geometry, omega, o.unit_vector[None], rprime, lmax=lmax,
                            constants=constants)[0]
    return FarFieldAmplitude(W, o)


# ---------------------------------------------------------------------------
# noise kernels


def _loss_factors(geometry: Geometry, omega: float, s: np.ndarray,
                  constants: PhysicalConstants) -> tuple[float, float, float]:
    """``(k0, sqrt(Im eps), sqrt(Im(-1/mu)))`` at source point ``s``."""
    k0 = constants.wavenumber(omega)
    if isinstance(geometry, Vacuum):
        return k0, 0.0, 0.0
    if isinstance(geometry, SphereInVacuum):
        sp = sphere_setup(geometry, omega, constants)
        if sp.region(s) == "out" or sp.is_vacuum:
            return k0, 0.0, 0.0
        material = geometry.material
    elif isinstance(geometry, Homogeneous):
        material = geometry.material
        if material.is_vacuum:
            return k0, 0.0, 0.0
    else:
        raise InvalidArgumentError(f"unsupported geometry {geometry!r}")
    ie = float(np.imag(epsilon(material, omega)))
    im = float(np.imag(-1.0 / mu(material, omega)))
    return k0, math.sqrt(max(ie, 0.0)), math.sqrt(max(im, 0.0))


def aux_dyadics(geometry: Geometry, omega: float, r, s, *, lmax: int | None = None,
                constants: PhysicalConstants = CONSTANTS) -> tuple[np.ndarray, np.ndarray]:
    """Noise-source dyadics ``A_e = k0 sqrt(Im eps) G`` and ``A_m = sqrt(Im(-1/mu)) G x curl_s``.

    Both vanish identically when ``s`` lies in vacuum.
    """
    omega = _check_omega(omega)
    s = as_vector(s).real
    k0, se, sm = _loss_factors(geometry, omega, s, constants)
    zero = np.zeros((3, 3), dtype=complex)
    if se == 0.0 and sm == 0.0:
        return zero, zero.copy()
    g = green(geometry, omega, r, s, lmax=lmax, constants=constants)
    return k0 * se * g.value, sm * g.curl_rprime


def scaled_dyadics(geometry: Geometry, omega: float, r, s,
                   constants: PhysicalConstants = CONSTANTS, *,
                   lmax: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``G_e = i sqrt(hbar mu0 w^2 / pi) A_e`` and ``G_m = -i sqrt(hbar mu0 w^2 / pi) A_m``."""
    A_e, A_m = aux_dyadics(geometry, omega, r, s, lmax=lmax, constants=constants)
    f = math.sqrt(constants.hbar * constants.mu0 * omega**2 / math.pi)
    return 1j * f * A_e, -1j * f * A_m
