"""Verification harness: each identity as a left side, a right side and a sweep.

Every ``verify_*`` function returns an :class:`IdentityReport`.  Residuals are
entrywise-max differences normalized by the larger entrywise-max magnitude of
the two sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import special

from . import dispersion
from .dispersion import Material
from .errors import ConvergenceFailure, InvalidArgumentError, MlnfError
from .green import (
    MAX_ORDER,
    Geometry,
    Homogeneous,
    SphereInVacuum,
    Vacuum,
    farfield_amplitudes,
    green,
    sphere_setup,
)
from .modes import (
    PlaneWaveLabel,
    _basis_many,
    mode_from_farfield,
    scattered_farfields,
    scattering_mode_fields,
)
from .numerics import (
    CONSTANTS,
    IDENTITY,
    PhysicalConstants,
    gauss_legendre,
    line_integrate_regularized,
    sphere_quadrature,
)
from .reports import IdentityReport, failed_report, make_report, relative_residual
from .vswf import mode_indices, radial_factors, vsh, vswf

__all__ = [
    "CheckConfig",
    "CHECKS",
    "check_names",
    "run_check",
    "verify_reciprocity",
    "verify_fundamental_relation",
    "verify_vacuum_closed_form",
    "verify_mode_completeness",
    "verify_commutator_kernel",
    "verify_frequency_integrals",
    "verify_jones_lemma",
    "verify_transversality",
    "verify_mode_farfield_link",
    "verify_kramers_kronig_check",
    "verify_coupling_identity_check",
    "vacuum_surface_closed_form",
    "small_s_im_green",
    "jones_remainder",
    "fundamental_sides",
]

_Vec = tuple[float, float, float]


@dataclass(frozen=True)
class CheckConfig:
    """Scene and numerical settings shared by the identity checks.

    Attributes
    ----------
    geometry : Vacuum, Homogeneous or SphereInVacuum
    omegas : tuple of float
        Angular frequencies (rad/s).
    point_pairs : tuple of (r, r') pairs
        Field points in the vacuum exterior (meters).
    interior_points : tuple of points
        Points inside the sphere, used by region-pair and mode checks.
    levels : int
        Number of refinement levels in convergence sweeps.
    lmax : int, optional
        Fixed sphere truncation order (adaptive when None).
    delta_schedule : tuple of float
        Abel regulators, in units of ``1/Omega``, for frequency integrals.
    jones_xi : float
        Asymptotic parameter of the Jones check.
    tolerances : dict
        Per-check overrides of the default tolerances.
    """

    geometry: Geometry
    omegas: tuple[float, ...]
    point_pairs: tuple[tuple[_Vec, _Vec], ...] = ()
    interior_points: tuple[_Vec, ...] = ()
    levels: int = 3
    lmax: int | None = None
    delta_schedule: tuple[float, ...] = (0.08, 0.04, 0.02, 0.01)
    jones_xi: float = 50.0
    tolerances: dict[str, float] = field(default_factory=dict)
    constants: PhysicalConstants = CONSTANTS

    def __post_init__(self):
        omegas = tuple(float(w) for w in self.omegas)
        if not omegas or any(not (w > 0 and math.isfinite(w)) for w in omegas):
            raise InvalidArgumentError("omegas must be a non-empty list of positive frequencies")
        object.__setattr__(self, "omegas", omegas)
        pairs = tuple((_as_point(a), _as_point(b)) for a, b in self.point_pairs)
        object.__setattr__(self, "point_pairs", pairs)
        object.__setattr__(self, "interior_points", tuple(_as_point(p) for p in self.interior_points))
        object.__setattr__(self, "tolerances", dict(self.tolerances))
        if self.levels < 1:
            raise InvalidArgumentError("levels must be >= 1")
        deltas = tuple(float(d) for d in self.delta_schedule)
        if len(deltas) < 3 or any(d <= 0 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
            raise InvalidArgumentError("delta_schedule must hold >= 3 strictly decreasing positive values")
        object.__setattr__(self, "delta_schedule", deltas)
        if isinstance(self.geometry, SphereInVacuum):
            a = self.geometry.radius
            for r, rp in pairs:
                for p in (r, rp):
                    if np.linalg.norm(p) < 1.05 * a:
                        raise InvalidArgumentError(
                            f"field point {list(p)} is not outside the sphere with margin 0.05 a")
            for p in self.interior_points:
                if np.linalg.norm(p) >= a * (1 - 1e-9):
                    raise InvalidArgumentError(f"interior point {list(p)} is not inside the sphere")
        for r, rp in pairs:
            if r == rp:
                raise InvalidArgumentError("point pairs must be distinct")

    def tolerance(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    @property
    def material(self) -> Material:
        if isinstance(self.geometry, (Homogeneous, SphereInVacuum)):
            return self.geometry.material
        return dispersion.VACUUM

    def describe(self) -> dict[str, Any]:
        g = self.geometry
        out: dict[str, Any] = {"geometry": type(g).__name__, "omegas": list(self.omegas)}
        if isinstance(g, SphereInVacuum):
            out["radius"] = g.radius
        return out


def _as_point(p) -> _Vec:
    v = np.asarray(p, dtype=float)
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise InvalidArgumentError(f"invalid point {p!r}")
    return tuple(float(x) for x in v)


def _is_sphere(config: CheckConfig) -> bool:
    return isinstance(config.geometry, SphereInVacuum) and not config.geometry.material.is_vacuum


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


# ---------------------------------------------------------------------------
# reciprocity


def verify_reciprocity(config: CheckConfig) -> IdentityReport:
    """``G(r, r') == G^T(r', r)`` and ``G x curl' (r, r') == -[curl G(r', r)]^T``.

    For a sphere every region pair built from the exterior pairs and the
    interior points is evaluated.
    """
    geo = config.geometry
    default = 1e-10 if isinstance(geo, SphereInVacuum) else 1e-13
    tol = config.tolerance("reciprocity", default)
    pairs = [(_vec(a), _vec(b)) for a, b in config.point_pairs]
    inner = [_vec(p) for p in config.interior_points]
    if isinstance(geo, SphereInVacuum) and inner:
        outer = [p for pr in pairs for p in pr] or [np.array([0.0, 0.0, 2.0 * geo.radius])]
        pairs += [(outer[0], inner[0]), (inner[0], outer[-1])]
        if len(inner) > 1:
            pairs.append((inner[0], inner[1]))
    worst, worst_curl, failures = 0.0, 0.0, []
    for w in config.omegas:
        for r, rp in pairs:
            try:
                a = green(geo, w, r, rp, lmax=config.lmax, constants=config.constants)
                b = green(geo, w, rp, r, lmax=config.lmax, constants=config.constants)
            except MlnfError as exc:
                failures.append(f"{list(r)} {list(rp)}: {exc}")
                continue
            worst = max(worst, relative_residual(a.value, b.value.T))
            worst_curl = max(worst_curl, relative_residual(a.curl_rprime, -b.curl_r.T))
    details = {"pairs": len(pairs) * len(config.omegas), "curl_residual": worst_curl}
    if failures:
        details["errors"] = failures
    return make_report("reciprocity", {**config.describe(), "pairs": len(pairs)},
                       [(0, max(worst, worst_curl))], tol, details, extra_ok=not failures)


# ---------------------------------------------------------------------------
# fundamental integral relation


def _exterior_order(a: float, r: np.ndarray, rp: np.ndarray, start: int) -> int:
    """Truncation making ``(a^2 / |r||r'|)^L`` negligible for exterior kernels."""
    q = a * a / (np.linalg.norm(r) * np.linalg.norm(rp))
    need = math.ceil(-15.0 * math.log(10.0) / math.log(q)) + 2
    return int(min(max(start, need), MAX_ORDER))


def _angular_blocks(L: int, degree: int):
    """Angular Gram matrices of the barred-function building blocks."""
    rule = sphere_quadrature(degree)
    u, w = rule.directions, rule.weights
    h = vsh(L, u)
    n, _ = mode_indices(L)
    V1 = h.X.conj()
    V2 = np.cross(u[None], V1)
    V3 = (-1j * np.sqrt(n * (n + 1.0)))[:, None, None] * h.Y.conj()[..., None] * u[None]
    V = (V1, V2, V3)
    sw = np.sqrt(w)[None, :, None]
    flat = [(v * sw).reshape(v.shape[0], -1) for v in V]
    A = {}
    for p in range(3):
        for q in range(p, 3):
            A[p, q] = flat[p] @ flat[q].conj().T
            if q != p:
                A[q, p] = A[p, q].conj().T
    return A


def _radial_blocks(sp, L: int, nodes: int):
    rho, w = gauss_legendre(nodes, 0.0, sp.radius)
    f = radial_factors(L, "j", sp.k1, rho, sp.x1)  # three (L, P) arrays
    wr = w * rho**2
    R = {}
    for p in range(3):
        for q in range(3):
            R[p, q] = (f[p] * wr[None]) @ f[q].conj().T
    return R


def volume_gram(sp, L: int, degree: int, nodes: int) -> np.ndarray:
    """``Q_ab = int_V B_a . conj(B_b)`` for barred ``[M_K, N_K]`` over the sphere.

    The product quadrature (Gauss in radius times the sphere rule) is applied
    separately to the radial and angular factors of each function.
    """
    A = _angular_blocks(L, degree)
    R = _radial_blocks(sp, L, nodes)
    n, _ = mode_indices(L)
    idx = n - 1

    def rad(p, q):
        return R[p, q][np.ix_(idx, idx)]

    K = n.size
    Q = np.empty((2 * K, 2 * K), dtype=complex)
    Q[:K, :K] = rad(0, 0) * A[0, 0]
    Q[:K, K:] = rad(0, 1) * A[0, 1] + rad(0, 2) * A[0, 2]
    Q[K:, :K] = rad(1, 0) * A[1, 0] + rad(2, 0) * A[2, 0]
    Q[K:, K:] = sum(rad(p, q) * A[p, q] for p in (1, 2) for q in (1, 2))
    return Q


def _noise_factors(sp, L: int, r: np.ndarray, omega: float, config: CheckConfig):
    """Left factors ``U_lambda(r)`` (2K, 3) with ``A_lambda(r, s) = sum_a U_a(r) B_a(s)``."""
    c = sp.coefficients(L)
    n, _ = mode_indices(L)
    M, N = vswf(L, "h", sp.k0, r[None], x_norm=sp.x0)
    M, N = M[:, 0], N[:, 0]
    dM, dN = c.deltaM[n - 1], c.deltaN[n - 1]
    pref = sp.mu * 1j * sp.k1
    material = config.geometry.material
    se = math.sqrt(max(float(np.imag(dispersion.epsilon(material, omega))), 0.0))
    sm = math.sqrt(max(float(np.imag(-1.0 / dispersion.mu(material, omega))), 0.0))
    Ue = sp.k0 * se * pref * np.concatenate([dM[:, None] * M, dN[:, None] * N])
    # G x curl_s swaps M <-> N on the source side and brings a factor -k1
    Um = -sm * pref * sp.k1 * np.concatenate([dN[:, None] * N, dM[:, None] * M])
    return Ue, Um


def _surface_term(config: CheckConfig, omega: float, r, rp, L: int | None, degree: int) -> np.ndarray:
    rule = sphere_quadrature(degree)
    k0 = config.constants.wavenumber(omega)
    Wr = farfield_amplitudes(config.geometry, omega, rule.directions, r, lmax=L,
                             constants=config.constants)
    Wp = Wr if np.array_equal(r, rp) else farfield_amplitudes(
        config.geometry, omega, rule.directions, rp, lmax=L, constants=config.constants)
    return k0 * np.einsum("s,sji,sjk->ik", rule.weights, Wr, Wp.conj())


def _level_settings(config: CheckConfig, omega: float, pairs) -> list[tuple[int, int, int]]:
    """``(L, degree, radial nodes)`` per refinement level."""
    geo = config.geometry
    if not _is_sphere(config):
        k0 = config.constants.wavenumber(omega)
        span = max(np.linalg.norm(_vec(p)) for pr in pairs for p in pr)
        base = int(math.ceil(2 * k0 * span)) + 16
        return [(0, base + 8 * i, 0) for i in range(config.levels)]
    sp = sphere_setup(geo, omega, config.constants)
    start = sp.start_order()
    L = config.lmax or max(_exterior_order(geo.radius, _vec(r), _vec(rp), start) for r, rp in pairs)
    k0r = sp.k0 * max(np.linalg.norm(_vec(p)) for pr in pairs for p in pr)
    base = max(2 * L, int(math.ceil(2 * k0r)) + 12)
    return [(L, base + 6 * i, 12 + 6 * i) for i in range(config.levels)]


def fundamental_sides(config: CheckConfig, omega: float, r, rp, setting, *, gram=None):
    """Volume term, surface term and ``Im G`` for one pair at one refinement level."""
    L, degree, nodes = setting
    r, rp = _vec(r), _vec(rp)
    if _is_sphere(config):
        sp = sphere_setup(config.geometry, omega, config.constants)
        Q = gram if gram is not None else volume_gram(sp, L, degree, nodes)
        vol = np.zeros((3, 3), dtype=complex)
        Ur = _noise_factors(sp, L, r, omega, config)
        Up = Ur if np.array_equal(r, rp) else _noise_factors(sp, L, rp, omega, config)
        for a, b in zip(Ur, Up):
            vol += a.T @ Q @ b.conj()
        surf = _surface_term(config, omega, r, rp, L, degree)
    else:
        vol = np.zeros((3, 3), dtype=complex)
        surf = _surface_term(config, omega, r, rp, None, degree)
    rhs = np.imag(green(config.geometry, omega, r, rp, constants=config.constants).value)
    return vol, surf, rhs


def _default_pairs(config: CheckConfig):
    if config.point_pairs:
        return [(_vec(a), _vec(b)) for a, b in config.point_pairs]
    raise InvalidArgumentError("this check needs at least one exterior point pair")


def verify_fundamental_relation(config: CheckConfig, *, include_volume: bool = True) -> IdentityReport:
    """Volume noise term plus far-field surface term against ``Im G``.

    With ``include_volume=False`` only the surface term is kept, which must
    fail for an absorbing sphere.
    """
    name = "fundamental_relation"
    if not isinstance(config.geometry, (Vacuum, SphereInVacuum)):
        raise InvalidArgumentError("the fundamental relation check needs a vacuum or sphere scene")
    mu_is_one = abs(complex(dispersion.mu(config.material, config.omegas[0])) - 1) < 1e-14
    tol = config.tolerance(name, 1e-6 if mu_is_one else 1e-5)
    pairs = _default_pairs(config)
    sweep_by_level: dict[int, float] = {}
    split = []
    for w in config.omegas:
        settings = _level_settings(config, w, pairs)
        for level, setting in enumerate(settings):
            gram = None
            if _is_sphere(config):
                sp = sphere_setup(config.geometry, w, config.constants)
                gram = volume_gram(sp, *setting)
            worst = 0.0
            for r, rp in pairs:
                vol, surf, rhs = fundamental_sides(config, w, r, rp, setting, gram=gram)
                lhs = surf + vol if include_volume else surf
                worst = max(worst, relative_residual(lhs, rhs))
                if level == len(settings) - 1:
                    split.append({"omega": w, "volume_norm": float(np.max(np.abs(vol))),
                                  "surface_norm": float(np.max(np.abs(surf))),
                                  "rhs_norm": float(np.max(np.abs(rhs)))})
            sweep_by_level[level] = max(sweep_by_level.get(level, 0.0), worst)
    label = name if include_volume else name + "_surface_only"
    return make_report(label, {**config.describe(), "include_volume": include_volume},
                       sorted(sweep_by_level.items()), tol,
                       {"split": split, "settings": [list(s) for s in settings]})


# ---------------------------------------------------------------------------
# vacuum closed form


def vacuum_surface_closed_form(k: float, R) -> np.ndarray:
    """Closed form of ``k int do W^T(o, r) W*(o, r')`` for vacuum, ``R = r - r'``."""
    R = np.asarray(R, dtype=float)
    d = float(np.linalg.norm(R))
    s = k * d
    zz = np.outer(R, R) / d**2
    return k / (4 * np.pi * s) * (np.cos(s) / s * (IDENTITY - 3 * zz)
                                  + np.sin(s) / s**2 * ((s**2 - 1) * IDENTITY - (s**2 - 3) * zz))


def small_s_im_green(k: float, R) -> np.ndarray:
    """Second-order expansion of ``Im G0`` for small ``s = k |R|``."""
    R = np.asarray(R, dtype=float)
    d = float(np.linalg.norm(R))
    s = k * d
    zz = np.outer(R, R) / d**2
    return k / (4 * np.pi) * ((2.0 / 3.0 - 2.0 * s**2 / 15.0) * IDENTITY + s**2 / 15.0 * zz)


def verify_vacuum_closed_form(omega: float, r, rprime, *, degrees: Sequence[int] | None = None,
                              tolerance: float = 1e-10,
                              constants: PhysicalConstants = CONSTANTS) -> IdentityReport:
    """Pairwise agreement of sphere quadrature, closed form and ``Im G0``."""
    r, rp = _vec(r), _vec(rprime)
    k = constants.wavenumber(omega)
    R = r - rp
    s = k * float(np.linalg.norm(R))
    if s == 0:
        raise InvalidArgumentError("r and r' must differ")
    span = k * max(np.linalg.norm(r), np.linalg.norm(rp))
    if degrees is None:
        base = int(math.ceil(2 * span)) + 16
        degrees = (base, base + 8, base + 16)
    closed = vacuum_surface_closed_form(k, R)
    img = np.imag(green(Vacuum(), omega, r, rp, constants=constants).value)
    sweep = []
    for level, deg in enumerate(degrees):
        rule = sphere_quadrature(deg)
        u = rule.directions
        Wr = np.exp(-1j * k * (u @ r))[:, None, None] * (IDENTITY[None] - u[:, :, None] * u[:, None, :])
        Wp = np.exp(-1j * k * (u @ rp))[:, None, None] * (IDENTITY[None] - u[:, :, None] * u[:, None, :])
        quad = k * np.einsum("s,sji,sjk->ik", rule.weights, Wr, Wp.conj()) / (16 * np.pi**2)
        res = max(relative_residual(quad, closed), relative_residual(quad, img),
                  relative_residual(closed, img))
        sweep.append((level, res))
    details = {
        "s": s,
        "quad_vs_closed": relative_residual(quad, closed),
        "quad_vs_img": relative_residual(quad, img),
        "closed_vs_img": relative_residual(closed, img),
        "small_s_expansion_residual": relative_residual(img, small_s_im_green(k, R)),
        "static_limit_residual": relative_residual(img, k / (6 * np.pi) * IDENTITY),
    }
    return make_report("vacuum_closed_form", {"omega": omega, "r": list(r), "rprime": list(rp)},
                       sweep, tolerance, details)


def _verify_vacuum_closed_form_config(config: CheckConfig) -> IdentityReport:
    tol = config.tolerance("vacuum_closed_form", 1e-10)
    reports = [verify_vacuum_closed_form(w, r, rp, tolerance=tol, constants=config.constants)
               for w in config.omegas for r, rp in _default_pairs(config)]
    return _merge("vacuum_closed_form", config, reports, tol)


def _merge(name: str, config: CheckConfig, reports: list[IdentityReport], tol: float) -> IdentityReport:
    levels: dict[int, float] = {}
    for rep in reports:
        for level, res in rep.sweep:
            levels[level] = max(levels.get(level, 0.0), res)
    ok = all(rep.converged for rep in reports)
    return make_report(name, config.describe(), sorted(levels.items()), tol,
                       {"parts": [rep.details for rep in reports]}, extra_ok=ok)


# ---------------------------------------------------------------------------
# modes


def _mode_gram(config: CheckConfig, omega: float, r, rp, L: int | None, degree: int) -> np.ndarray:
    """``int do_n sum_nu F(r) F*(r')`` by sphere quadrature over incidences."""
    rule = sphere_quadrature(degree)
    n = rule.directions
    e1, e2 = _basis_many(n)
    pts = np.stack([r, rp])
    out = np.zeros((3, 3), dtype=complex)
    for e in (e1, e2):
        F = scattering_mode_fields(config.geometry, omega, n, e, pts, lmax=L, constants=config.constants)
        out += np.einsum("d,di,dj->ij", rule.weights, F[:, 0], F[:, 1].conj())
    return out


def verify_mode_completeness(config: CheckConfig) -> IdentityReport:
    """``int do_n sum_nu F F* == 16 pi^2 int do W^T W*`` for each point pair.

    Also records the scaled variant with the field prefactor
    ``hbar mu0 w^3 / (16 pi^3 c)``, which only rescales both sides.
    """
    name = "mode_completeness"
    tol = config.tolerance(name, 1e-7 if _is_sphere(config) else 1e-10)
    pairs = _default_pairs(config)
    levels: dict[int, float] = {}
    hermitian = 0.0
    scaled = 0.0
    for w in config.omegas:
        for level, (L, degree, _) in enumerate(_level_settings(config, w, pairs)):
            Lm = L if _is_sphere(config) else None
            worst = 0.0
            for r, rp in pairs:
                lhs = _mode_gram(config, w, r, rp, Lm, degree)
                surf = _surface_term(config, w, r, rp, Lm, degree)
                k0 = config.constants.wavenumber(w)
                rhs = 16 * np.pi**2 * surf / k0
                worst = max(worst, relative_residual(lhs, rhs))
                c = config.constants
                f = c.hbar * c.mu0 * w**3 / (16 * np.pi**3 * c.c)
                scaled = max(scaled, relative_residual(f * lhs, f * rhs))
                if level == 0:
                    diag = _mode_gram(config, w, r, r, Lm, degree)
                    hermitian = max(hermitian, relative_residual(diag, diag.conj().T))
                    eig = np.linalg.eigvalsh(0.5 * (diag + diag.conj().T))
                    hermitian = max(hermitian, max(0.0, -float(eig.min())) / float(np.abs(eig).max()))
            levels[level] = max(levels.get(level, 0.0), worst)
    return make_report(name, config.describe(), sorted(levels.items()), tol,
                       {"gram_hermitian_psd_residual": hermitian, "scaled_residual": scaled})


def verify_commutator_kernel(config: CheckConfig, *, include_volume: bool = True) -> IdentityReport:
    """Noise-kernel volume term plus scattering-mode term against ``(hbar mu0 w^2/pi) Im G``.

    The report's details carry the residual obtained when the volume term is
    dropped (which must not vanish for an absorbing sample).
    """
    name = "commutator_kernel"
    tol = config.tolerance(name, 1e-6)
    pairs = _default_pairs(config)
    levels: dict[int, float] = {}
    dropped = 0.0
    c = config.constants
    for w in config.omegas:
        pref = c.hbar * c.mu0 * w**2 / math.pi
        fmode = c.hbar * c.mu0 * w**3 / (16 * np.pi**3 * c.c)
        for level, setting in enumerate(_level_settings(config, w, pairs)):
            L, degree, nodes = setting
            gram = None
            if _is_sphere(config):
                gram = volume_gram(sphere_setup(config.geometry, w, c), *setting)
            worst = 0.0
            for r, rp in pairs:
                vol, _, rhs = fundamental_sides(config, w, r, rp, setting, gram=gram)
                modes = _mode_gram(config, w, _vec(r), _vec(rp), L if _is_sphere(config) else None, degree)
                kernel_modes = fmode * modes
                full = pref * vol + kernel_modes
                target = pref * rhs
                lhs = full if include_volume else kernel_modes
                worst = max(worst, relative_residual(lhs, target))
                dropped = max(dropped, relative_residual(kernel_modes, target))
            levels[level] = max(levels.get(level, 0.0), worst)
    label = name if include_volume else name + "_volume_dropped"
    return make_report(label, {**config.describe(), "include_volume": include_volume},
                       sorted(levels.items()), tol, {"volume_dropped_residual": dropped})


def verify_mode_farfield_link(config: CheckConfig) -> IdentityReport:
    """``F(r) == 4 pi e . W(o_{-n}, r)`` at every configured point."""
    name = "mode_farfield_link"
    tol = config.tolerance(name, 1e-8)
    pts = [_vec(p) for pr in config.point_pairs for p in pr] + [_vec(p) for p in config.interior_points]
    if not pts:
        raise InvalidArgumentError("this check needs field points")
    directions = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0]),
                  np.array([0.48, -0.6, 0.64]), np.array([-0.36, 0.48, -0.8])]
    worst = 0.0
    for w in config.omegas:
        for n in directions:
            e1, e2 = _basis_many(n[None])
            F = scattering_mode_fields(config.geometry, w, np.stack([n, n]), np.concatenate([e1, e2]),
                                       np.stack(pts), lmax=config.lmax, constants=config.constants)
            for nu in (1, 2):
                lab = PlaneWaveLabel(w, tuple(n), nu)
                G = np.stack([mode_from_farfield(config.geometry, lab, p, lmax=config.lmax,
                                                 constants=config.constants) for p in pts])
                worst = max(worst, relative_residual(F[nu - 1], G))
    return make_report(name, {**config.describe(), "points": len(pts)}, [(0, worst)], tol,
                       {"points": len(pts), "directions": len(directions)})


def verify_transversality(config: CheckConfig) -> IdentityReport:
    """``u . W(o, r') = 0`` and ``u . w_sc(o) = 0`` over a degree-16 direction grid."""
    name = "transversality"
    tol = config.tolerance(name, 1e-12)
    if isinstance(config.geometry, Homogeneous):
        raise InvalidArgumentError("no far field in an unbounded medium")
    rule = sphere_quadrature(16)
    u = rule.directions
    sources = [_vec(p) for pr in config.point_pairs for p in pr] + [_vec(p) for p in config.interior_points]
    if not sources:
        sources = [np.zeros(3)]
    worst_w, worst_f = 0.0, 0.0
    for w in config.omegas:
        for rp in sources:
            W = farfield_amplitudes(config.geometry, w, u, rp, lmax=config.lmax, constants=config.constants)
            uW = np.einsum("pi,pij->pj", u, W)
            worst_w = max(worst_w, float(np.max(np.abs(uW))) / float(np.max(np.abs(W))))
        for n in (np.array([0.0, 0.0, 1.0]), np.array([0.6, 0.0, 0.8])):
            for e in _basis_many(n[None]):
                ws = scattered_farfields(config.geometry, w, n, e[0], u, lmax=config.lmax,
                                         constants=config.constants)
                scale = float(np.max(np.abs(ws)))
                if scale > 0:
                    worst_f = max(worst_f, float(np.max(np.abs(np.einsum("pi,pi->p", u, ws)))) / scale)
    return make_report(name, config.describe(), [(0, max(worst_w, worst_f))], tol,
                       {"W": worst_w, "w_sc": worst_f, "directions": len(rule)})


# ---------------------------------------------------------------------------
# Jones' lemma


def jones_remainder(f: Callable[[np.ndarray], np.ndarray], n, xi: float, degree: int) -> float:
    """``|xi int do e^{i xi n.u} f(o) - 2 pi i [e^{-i xi} f(-n) - e^{i xi} f(n)]|`` (entrywise max)."""
    n = np.asarray(n, dtype=float)
    rule = sphere_quadrature(degree)
    u = rule.directions
    vals = np.asarray(f(u))
    phase = rule.weights * np.exp(1j * xi * (u @ n))
    lhs = xi * np.tensordot(phase, vals, axes=(0, 0))
    fn = np.asarray(f(n[None]))[0]
    fm = np.asarray(f(-n[None]))[0]
    rhs = 2j * np.pi * (np.exp(-1j * xi) * fm - np.exp(1j * xi) * fn)
    return float(np.max(np.abs(lhs - rhs)))


def verify_jones_lemma(config: CheckConfig) -> IdentityReport:
    """Ratio of Jones remainders at ``xi`` and ``2 xi`` for ``f(o) = W_vac(o, r')``.

    A remainder of order ``1/xi^2`` gives ``R(xi) / R(2 xi) = 4``; the report
    residual is ``|ratio / 4 - 1|`` so the default tolerance 0.2 accepts the
    band [3.2, 4.8].  The details also carry the inverse ratio and the
    empirical decay exponent.
    """
    name = "jones_lemma"
    tol = config.tolerance(name, 0.2)
    w = config.omegas[0]
    k = config.constants.wavenumber(w)
    rp = _vec(config.point_pairs[0][1]) if config.point_pairs else np.array([0.3, -0.2, 0.5]) / k
    n = np.array([0.0, 0.0, 1.0])
    xi = float(config.jones_xi)

    def f(u):
        phase = np.exp(-1j * k * (u @ rp))
        return phase[:, None, None] * (IDENTITY[None] - u[:, :, None] * u[:, None, :]) / (4 * np.pi)

    span = k * float(np.linalg.norm(rp))
    sweep, ratios = [], []
    for level in range(config.levels):
        base = int(math.ceil(2 * xi + 2 * span)) + 40 + 20 * level
        r1 = jones_remainder(f, n, xi, base)
        r2 = jones_remainder(f, n, 2 * xi, int(math.ceil(2 * (2 * xi) + 2 * span)) + 40 + 20 * level)
        ratio = r1 / r2
        ratios.append((r1, r2, ratio))
        sweep.append((level, abs(ratio / 4.0 - 1.0)))
    r1, r2, ratio = ratios[-1]
    details = {"xi": xi, "R_xi": r1, "R_2xi": r2, "ratio_R_xi_over_R_2xi": ratio,
               "ratio_R_2xi_over_R_xi": r2 / r1, "decay_exponent": math.log(ratio, 2)}
    return make_report(name, {"xi": xi, "rprime": list(rp), "omega": w}, sweep, tol, details)


# ---------------------------------------------------------------------------
# frequency integrals


def _vacuum_green_k(k: np.ndarray, R: np.ndarray) -> np.ndarray:
    """``G0`` for many (complex) wavenumbers at one separation, shape (W, 3, 3)."""
    d = float(np.linalg.norm(R))
    Rh = R / d
    s = k * d
    g = np.exp(1j * s) / (4 * np.pi * d)
    a = g * (1 + 1j / s - 1 / s**2)
    b = g * (-1 - 3j / s + 3 / s**2)
    return a[:, None, None] * IDENTITY[None] + b[:, None, None] * np.outer(Rh, Rh)[None]


def _vacuum_im_green_k(k: np.ndarray, R: np.ndarray) -> np.ndarray:
    """``Im G0`` for real wavenumbers via spherical Bessel functions (no cancellation)."""
    d = float(np.linalg.norm(R))
    Rh = R / d
    s = np.asarray(k, dtype=float) * d
    j0 = special.spherical_jn(0, s)
    j1s = np.where(s > 1e-3, special.spherical_jn(1, np.maximum(s, 1e-3)) / np.maximum(s, 1e-3),
                   1.0 / 3.0 - s**2 / 30.0)
    a = k / (4 * np.pi) * (j0 - j1s)
    b = k / (4 * np.pi) * (3 * j1s - j0)
    return a[:, None, None] * IDENTITY[None] + b[:, None, None] * np.outer(Rh, Rh)[None]


def _pv_integral(numer: Callable[[np.ndarray], np.ndarray], poles: Sequence[float],
                 dpoly: Callable[[np.ndarray], np.ndarray], dprime: Callable[[float], float],
                 deltas, cutoff: float, breakpoints) -> Any:
    """Abel-regularized principal value of ``int_0^cutoff numer(x) / D(x) dx``.

    Each simple pole ``p`` of ``D`` is removed by subtracting
    ``res_p e^{-delta (p - x)} / (x - p)`` on a window symmetric about ``p``,
    whose principal value vanishes.
    """
    poles = list(poles)
    res = [numer(np.array([p]))[0] / dprime(p) for p in poles]
    gaps = sorted([0.0] + poles)
    half = min(np.diff(gaps).min(), min(abs(p - q) for p in poles for q in poles if p != q)
               if len(poles) > 1 else np.inf) * 0.45

    def f(x, d):
        v = numer(x) / dpoly(x).reshape((-1,) + (1,) * (numer(x[:1]).ndim - 1))
        for p, rp_ in zip(poles, res):
            near = np.abs(x - p) < half
            if np.any(near):
                corr = np.zeros(x.shape)
                corr[near] = np.exp(-d * (p - x[near])) / (x[near] - p)
                v = v - rp_[None] * corr.reshape((-1,) + (1,) * (v.ndim - 1))
        return v

    edges = list(breakpoints) + [p for p in poles] + [p - half for p in poles] + [p + half for p in poles]
    return line_integrate_regularized(f, deltas, cutoff, breakpoints=edges, panels=256, rtol=1e-8,
                                      delta_dependent=True)


def frequency_integrals(Omega: float, Omega2: float, R, deltas, cutoff: float,
                        constants: PhysicalConstants = CONSTANTS) -> dict[str, dict[str, Any]]:
    """Regularized left sides and stated right sides of the four vacuum integrals.

    Frequencies are integrated in the scaled variable ``x = w / Omega``;
    ``deltas`` and ``cutoff`` are in that variable.  Each entry carries the
    computed value, the stated right side, and a right side that includes the
    static (``w -> 0``) pole of the vacuum Green's function.
    """
    R = np.asarray(R, dtype=float)
    c = constants.c
    q = Omega2 / Omega
    d = float(np.linalg.norm(R))
    Rh = R / d
    static = c**2 * (3 * np.outer(Rh, Rh) - IDENTITY) / (4 * np.pi * d**3)

    def img(x):
        return _vacuum_im_green_k(Omega * np.asarray(x, dtype=float) / c, R)

    def G(w):
        return _vacuum_green_k(np.array([w / c]), R)[0]

    GO, GO2 = G(Omega), G(Omega2)
    bp = [0.5, 1.0, q, 2 * q]
    out: dict[str, dict[str, Any]] = {}

    # I1: Im int w G dw, Abel-regularized (Im G is entire in w)
    r1 = line_integrate_regularized(lambda x: Omega**2 * x[:, None, None] * img(x), deltas, cutoff,
                                    breakpoints=bp, panels=256, rtol=1e-8)
    scale1 = math.pi * c**2 / (2 * d**3)
    out["I1"] = {"value": r1.value, "rhs": np.zeros((3, 3)), "rhs_static": 0.5 * math.pi * static,
                 "error": r1.error, "scale": scale1}

    # I2 and I3 share the denominator (1 - x^2)(q^2 - x^2) after scaling
    def d2(x):
        return (1 - x**2) * (q**2 - x**2)

    def d2p(p):
        return -2 * p * (q**2 - p**2) - 2 * p * (1 - p**2)

    pref = 2 / math.pi
    r2 = _pv_integral(lambda x: pref / Omega**2 * x[:, None, None] * img(x), [1.0, q], d2, d2p,
                      deltas, cutoff, bp)
    rhs2 = -np.real(GO / (Omega2**2 - Omega**2) + GO2 / (Omega**2 - Omega2**2))
    out["I2"] = {"value": r2.value, "rhs": rhs2, "rhs_static": rhs2 + static / (Omega**2 * Omega2**2),
                 "error": r2.error}

    r3 = _pv_integral(lambda x: pref * x[:, None, None] ** 3 * img(x), [1.0, q], d2, d2p,
                      deltas, cutoff, bp)
    rhs3 = -np.real(Omega**2 * GO / (Omega2**2 - Omega**2) + Omega2**2 * GO2 / (Omega**2 - Omega2**2))
    out["I3"] = {"value": r3.value, "rhs": rhs3, "rhs_static": rhs3, "error": r3.error}

    r4 = _pv_integral(lambda x: pref * x[:, None, None] * img(x), [1.0], lambda x: 1 - x**2,
                      lambda p: -2 * p, deltas, cutoff, bp)
    rhs4 = -np.real(GO)
    out["I4"] = {"value": r4.value, "rhs": rhs4, "rhs_static": rhs4 + static / Omega**2, "error": r4.error}
    return out


def verify_frequency_integrals(config: CheckConfig) -> IdentityReport:
    """Vacuum frequency integrals I1-I4 by Abel-regularized line integration.

    The pair separation comes from the first configured pair; ``Omega`` is the
    first configured frequency and ``Omega' = 2 Omega``.  I1 is compared with
    zero on the natural scale ``pi c^2 / (2 |r - r'|^3)``; I2-I4 with their
    stated right sides.  The sweep doubles the frequency cutoff once.
    """
    name = "frequency_integrals"
    tol = config.tolerance(name, 1e-3)
    r, rp = _default_pairs(config)[0]
    R = r - rp
    Omega = config.omegas[0]
    deltas = tuple(config.delta_schedule)
    base_cut = 40.0 / min(deltas)
    sweep, sub, corrected = [], {}, {}
    failures = []
    for level, cut in enumerate((base_cut, 2 * base_cut)):
        try:
            vals = frequency_integrals(Omega, 2 * Omega, R, deltas, cut, config.constants)
        except ConvergenceFailure as exc:
            failures.append(str(exc))
            sweep.append((level, math.inf))
            continue
        worst = 0.0
        for key, v in vals.items():
            if key == "I1":
                res = float(np.max(np.abs(v["value"]))) / v["scale"]
                cres = relative_residual(v["value"], v["rhs_static"])
            else:
                res = relative_residual(v["value"], v["rhs"])
                cres = relative_residual(v["value"], v["rhs_static"])
            sub[key] = res
            corrected[key] = cres
            worst = max(worst, res)
        sweep.append((level, worst))
    k = config.constants.wavenumber(Omega)
    details = {"residuals": sub, "residuals_with_static_pole": corrected,
               "kR": k * float(np.linalg.norm(R)), "deltas": list(deltas)}
    if failures:
        details["errors"] = failures
    return make_report(name, {"Omega": Omega, "Omega2": 2 * Omega, "R": list(R)}, sweep, tol, details,
                       extra_ok=not failures)


# ---------------------------------------------------------------------------
# dispersion wrappers


def _pole_frequencies(material: Material) -> list[float]:
    if material.is_vacuum:
        return []
    m = material.model
    return [p.omega0 for p in m.eps_poles + m.mu_poles]


def verify_kramers_kronig_check(config: CheckConfig) -> IdentityReport:
    """Kramers-Kronig check on the configured material."""
    tol = config.tolerance("kramers_kronig", 1e-5)
    material = config.material
    w0 = _pole_frequencies(material) or list(config.omegas)
    grid = np.linspace(0.25 * min(w0), 3.0 * max(w0), 24)
    return dispersion.verify_kramers_kronig(material, grid, 1e-3, tolerance=tol)


def verify_coupling_identity_check(config: CheckConfig) -> IdentityReport:
    """Reservoir coupling identity on the configured material."""
    tol = config.tolerance("coupling_identity", 1e-4)
    material = config.material
    w0 = _pole_frequencies(material) or list(config.omegas)
    t = 1.0 / max(w0)
    return dispersion.verify_coupling_identity(material, [t, -t, 3 * t], tolerance=tol,
                                               constants=config.constants)


# ---------------------------------------------------------------------------
# registry


CHECKS: dict[str, tuple[Callable[[CheckConfig], IdentityReport], str]] = {
    "commutator_kernel": (verify_commutator_kernel,
                          "noise plus scattering-mode kernels balance Im G"),
    "coupling_identity": (verify_coupling_identity_check,
                          "integral of alpha^2 cos against time-domain response derivative"),
    "frequency_integrals": (verify_frequency_integrals,
                            "frequency integrals of the vacuum Green's function (I1-I4)"),
    "fundamental_relation": (verify_fundamental_relation,
                             "volume noise term plus far-field surface term equals Im G"),
    "jones_lemma": (verify_jones_lemma, "stationary-phase asymptotics of direction integrals"),
    "kramers_kronig": (verify_kramers_kronig_check, "causality of the Lorentz-pole response"),
    "mode_completeness": (verify_mode_completeness,
                          "direction-integrated mode dyads equal 16 pi^2 int W^T W*"),
    "mode_farfield_link": (verify_mode_farfield_link,
                           "scattering mode equals 4 pi e . W(o_-n, r)"),
    "reciprocity": (verify_reciprocity, "G(r, r') = G^T(r', r)"),
    "transversality": (verify_transversality, "far-field amplitudes are transverse"),
    "vacuum_closed_form": (_verify_vacuum_closed_form_config,
                           "vacuum surface relation against its closed form and Im G"),
}


def check_names() -> list[str]:
    return sorted(CHECKS)


def run_check(name: str, config: CheckConfig) -> IdentityReport:
    """Run one registered check; evaluation errors become a failed report."""
    if name not in CHECKS:
        raise InvalidArgumentError(f"unknown check {name!r}")
    fn, _ = CHECKS[name]
    try:
        return fn(config)
    except (MlnfError, ValueError, ArithmeticError) as exc:
        tol = config.tolerances.get(name, 0.0)
        return failed_report(name, config.describe(), tol, exc)
