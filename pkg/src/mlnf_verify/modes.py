"""Scattering modes: plane wave plus the field scattered by the sample.

The scattered field comes from the plane-wave Mie expansion

    e exp(i k n.r) = sum 4 pi i^n [(X*(n).e) M1 - i ((n x X*(n)).e) N1],

outgoing outside the sphere and regular (transmitted) inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgumentError
from .green import (
    Geometry,
    Homogeneous,
    SphereInVacuum,
    Vacuum,
    converged_series,
    farfield_amplitude,
    sphere_setup,
    vacuum_green_values,
)
from .numerics import CONSTANTS, PhysicalConstants, SolidAngle, as_vector, gauss_legendre, sphere_quadrature
from .vswf import mode_indices, vsh, vswf

__all__ = [
    "PlaneWaveLabel",
    "ScatteringMode",
    "polarization_basis",
    "incident_wave",
    "scattering_mode_eval",
    "scattering_mode_fields",
    "scattered_farfield",
    "scattered_farfields",
    "mode_from_farfield",
    "scattered_field_volume_integral",
]

_CHUNK = 1024
_Z = np.array([0.0, 0.0, 1.0])
_X = np.array([1.0, 0.0, 0.0])


def _unit(n, tol: float = 1e-10) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    if n.shape != (3,) or not np.all(np.isfinite(n)):
        raise InvalidArgumentError("direction must be a finite 3-vector")
    if abs(np.linalg.norm(n) - 1.0) > tol:
        raise InvalidArgumentError(f"direction {n.tolist()} is not a unit vector")
    return n


def polarization_basis(n) -> tuple[np.ndarray, np.ndarray]:
    """Right-handed transverse pair ``(e1, e2)`` for propagation direction ``n``.

    ``e1 = normalize(z x n)``, falling back to ``normalize(x x n)`` near the
    poles, and ``e2 = n x e1``.
    """
    n = _unit(n)
    e1 = np.cross(_Z, n)
    if np.linalg.norm(e1) <= 1e-6:
        e1 = np.cross(_X, n)
    e1 = e1 / np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def _basis_many(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e1 = np.cross(_Z[None], n)
    pole = np.linalg.norm(e1, axis=1) <= 1e-6
    e1[pole] = np.cross(_X[None], n[pole])
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    return e1, np.cross(n, e1)


@dataclass(frozen=True)
class PlaneWaveLabel:
    """Incident plane wave: frequency, unit propagation direction, polarization 1 or 2."""

    omega: float
    n: tuple[float, float, float]
    nu: int

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise InvalidArgumentError("omega must be positive and finite")
        n = _unit(self.n)
        object.__setattr__(self, "n", tuple(float(x) for x in n))
        if self.nu not in (1, 2):
            raise InvalidArgumentError("polarization index must be 1 or 2")

    @property
    def direction(self) -> np.ndarray:
        return np.array(self.n)

    @property
    def polarization(self) -> np.ndarray:
        return polarization_basis(self.direction)[self.nu - 1]


@dataclass(frozen=True)
class ScatteringMode:
    label: PlaneWaveLabel
    geometry: Geometry


def incident_wave(label: PlaneWaveLabel, r, constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """``exp(i k n.r) e_nu``."""
    r = as_vector(r).real
    k = constants.wavenumber(label.omega)
    return np.exp(1j * k * float(label.direction @ r)) * label.polarization


def _plane_wave_coefficients(L: int, n: np.ndarray, e: np.ndarray):
    """Expansion coefficients ``(alpha, beta)`` of shape (D, K)."""
    deg, _ = mode_indices(L)
    Xc = vsh(L, n).X.conj()  # (K, D, 3)
    nxX = np.cross(n[None], Xc)
    alpha = 4 * np.pi * (1j ** deg)[None] * np.einsum("kdi,di->dk", Xc, e)
    beta = -4 * np.pi * (1j ** (deg + 1))[None] * np.einsum("kdi,di->dk", nxX, e)
    return alpha, beta


def _check_scene(geometry: Geometry) -> None:
    if isinstance(geometry, Homogeneous):
        raise DomainError("scattering modes vanish in an unbounded lossy medium")
    if not isinstance(geometry, (Vacuum, SphereInVacuum)):
        raise InvalidArgumentError(f"unsupported geometry {geometry!r}")


def scattering_mode_fields(geometry: Geometry, omega: float, directions, polarizations, points, *,
                           lmax: int | None = None,
                           constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Total mode fields for many incidences at many points, shape (D, P, 3)."""
    _check_scene(geometry)
    n = np.atleast_2d(np.asarray(directions, dtype=float))
    e = np.atleast_2d(np.asarray(polarizations, dtype=float))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] > _CHUNK:
        parts = [scattering_mode_fields(geometry, omega, n, e, pts[i:i + _CHUNK], lmax=lmax,
                                        constants=constants)
                 for i in range(0, pts.shape[0], _CHUNK)]
        return np.concatenate(parts, axis=1)
    k0 = constants.wavenumber(omega)
    incident = np.exp(1j * k0 * (n @ pts.T))[..., None] * e[:, None, :]
    if isinstance(geometry, Vacuum) or geometry.material.is_vacuum:
        return incident
    sp = sphere_setup(geometry, omega, constants)
    inside = np.array([sp.region(p) == "in" for p in pts])
    out = np.empty(incident.shape, dtype=complex)

    def evaluate(L, sel, region):
        c = sp.coefficients(L)
        deg, _ = mode_indices(L)
        alpha, beta = _plane_wave_coefficients(L, n, e)
        if region == "out":
            cm, cn = c.tauM / c.h0, c.tauN / c.h0
            M, N = vswf(L, "h", sp.k0, pts[sel], x_norm=sp.x0)
        else:
            cm, cn = c.gammaM / c.h0, c.gammaN / c.h0
            M, N = vswf(L, "j", sp.k1, pts[sel], x_norm=sp.x1)
        a = alpha * cm[deg - 1][None]
        b = beta * cn[deg - 1][None]
        terms = np.einsum("dk,kpi->dpki", a, M) + np.einsum("dk,kpi->dpki", b, N)
        per = np.zeros(terms.shape[:2] + (L, 3), dtype=complex)
        np.add.at(per, (slice(None), slice(None), deg - 1), terms)
        return per[..., None]  # degree axis at -3

    for region, sel in (("out", ~inside), ("in", inside)):
        if not np.any(sel):
            continue
        ref = float(np.max(np.abs(incident[:, sel])))
        summed, _ = converged_series(lambda L: evaluate(L, sel, region), sp.start_order(), ref, lmax)
        summed = summed[..., 0]
        out[:, sel] = summed + incident[:, sel] if region == "out" else summed
    return out


def scattering_mode_eval(mode: ScatteringMode, r, *, lmax: int | None = None,
                         constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Total field ``F = F_in + F_sc`` of a scattering mode at ``r``.

    Outside the sphere ``F_sc`` is the outgoing Mie series; inside, ``F`` is
    the transmitted series and ``F_sc = F - F_in`` by definition.
    """
    lab = mode.label
    r = as_vector(r).real
    return scattering_mode_fields(mode.geometry, lab.omega, lab.direction[None], lab.polarization[None],
                                  r[None], lmax=lmax, constants=constants)[0, 0]


def scattered_farfields(geometry: Geometry, omega: float, direction, polarization, outgoing, *,
                        lmax: int | None = None,
                        constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Vectorized ``w_sc`` for one incidence over unit vectors ``outgoing`` (P, 3)."""
    _check_scene(geometry)
    u = np.atleast_2d(np.asarray(outgoing, dtype=float))
    if isinstance(geometry, Vacuum) or geometry.material.is_vacuum:
        return np.zeros(u.shape, dtype=complex)
    sp = sphere_setup(geometry, omega, constants)
    n = np.asarray(direction, dtype=float)[None]
    e = np.asarray(polarization, dtype=float)[None]

    def evaluate(L):
        c = sp.coefficients(L)
        deg, _ = mode_indices(L)
        alpha, beta = _plane_wave_coefficients(L, n, e)
        X = vsh(L, u).X  # (K, P, 3)
        uxX = np.cross(u[None], X)
        tm = (c.tauM / c.h0 / c.h0)[deg - 1]
        tn = (c.tauN / c.h0 / c.h0)[deg - 1]
        a = alpha[0] * tm * (-1j) ** (deg + 1) / sp.k0
        b = beta[0] * tn * (-1j) ** deg / sp.k0
        terms = a[:, None, None] * X + b[:, None, None] * uxX
        per = np.zeros((u.shape[0], L, 3), dtype=complex)
        np.add.at(per, (slice(None), deg - 1), terms.transpose(1, 0, 2))
        return per[..., None]

    summed, _ = converged_series(evaluate, sp.start_order(), 0.0, lmax)
    return summed[..., 0]


def scattered_farfield(mode: ScatteringMode, o, *, lmax: int | None = None,
                       constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """``w_sc(o) = lim r exp(-i k r) F_sc(r u)``, transverse to ``u``."""
    if not isinstance(o, SolidAngle):
        o = SolidAngle.from_vector(o)
    lab = mode.label
    return scattered_farfields(mode.geometry, lab.omega, lab.direction, lab.polarization,
                               o.unit_vector[None], lmax=lmax, constants=constants)[0]


def mode_from_farfield(geometry: Geometry, label: PlaneWaveLabel, r, *, lmax: int | None = None,
                       constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """``4 pi e . W(o_{-n}, r)``: the mode as radiated by a dipole at infinity.

    A point dipole along ``e`` placed far away in direction ``-n`` produces, in
    the limit, the same field as the incident plane wave plus its scattered
    wave.
    """
    _check_scene(geometry)
    W = farfield_amplitude(geometry, label.omega, -label.direction, r, lmax=lmax,
                           constants=constants).W
    return 4 * np.pi * label.polarization @ W


def scattered_field_volume_integral(mode: ScatteringMode, r, *, radial_nodes: int = 24,
                                    degree: int = 24, lmax: int | None = None,
                                    constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Scattered field from the volume-integral representation (cross-check only).

    ``F_sc(r) = k0^2 (eps - 1) int_V G0(r, s) . F(s) d^3 s`` for a
    non-magnetic sphere and ``r`` outside it, with ``F`` the interior
    (transmitted) field.  Evaluated by Gauss-Legendre in radius times a
    product rule on the sphere.
    """
    geometry, lab = mode.geometry, mode.label
    if not isinstance(geometry, SphereInVacuum):
        raise InvalidArgumentError("volume representation needs a sphere geometry")
    sp = sphere_setup(geometry, lab.omega, constants)
    if sp.is_vacuum:
        return np.zeros(3, dtype=complex)
    if abs(sp.mu - 1.0) > 1e-14:
        raise InvalidArgumentError("volume representation implemented for mu = 1 only")
    r = as_vector(r).real
    if sp.region(r) != "out":
        raise InvalidArgumentError("field point must lie outside the sphere")
    rho, wr = gauss_legendre(radial_nodes, 0.0, sp.radius)
    rule = sphere_quadrature(degree)
    pts = (rho[:, None, None] * rule.directions[None]).reshape(-1, 3)
    w = (wr[:, None] * rho[:, None] ** 2 * rule.weights[None]).ravel()
    F = scattering_mode_fields(geometry, lab.omega, lab.direction[None], lab.polarization[None], pts,
                               lmax=lmax, constants=constants)[0]
    G = vacuum_green_values(sp.k0, r[None] - pts)
    total = np.einsum("p,pij,pj->i", w, G, F)
    return sp.k0**2 * (sp.eps - 1.0) * total
