"""Vector/dyadic helpers, spherical Bessel functions, and quadrature rules.

Vectors are ``numpy`` arrays of shape ``(3,)`` and dyadics are arrays of
shape ``(3, 3)``; batched variants carry leading axes.  Every function here
is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import constants as _sc

from .errors import ConvergenceFailure, DomainError, InvalidArgumentError

__all__ = [
    "IDENTITY",
    "CONSTANTS",
    "PhysicalConstants",
    "SolidAngle",
    "SphereRule",
    "SphericalBessel",
    "RegularizedIntegral",
    "as_vector",
    "as_dyadic",
    "outer",
    "cross_matrix",
    "unit_vectors",
    "sphere_quadrature",
    "gauss_legendre",
    "spherical_bessel_jh",
    "spherical_jn_table",
    "spherical_hn_table",
    "adaptive_panel_integrate",
    "richardson",
    "line_integrate_regularized",
]

IDENTITY = np.eye(3, dtype=complex)
IDENTITY.setflags(write=False)


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants used throughout (CODATA values from :mod:`scipy.constants`)."""

    c: float = _sc.c
    eps0: float = _sc.epsilon_0
    mu0: float = _sc.mu_0
    hbar: float = _sc.hbar

    def wavenumber(self, omega):
        """Vacuum wavenumber ``omega / c``."""
        return omega / self.c


CONSTANTS = PhysicalConstants()


def as_vector(v) -> np.ndarray:
    """Return ``v`` as a finite complex 3-vector."""
    a = np.asarray(v, dtype=complex)
    if a.shape != (3,):
        raise InvalidArgumentError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("vector has non-finite components")
    return a


def as_dyadic(d) -> np.ndarray:
    """Return ``d`` as a finite complex 3x3 dyadic."""
    a = np.asarray(d, dtype=complex)
    if a.shape != (3, 3):
        raise InvalidArgumentError(f"expected a 3x3 dyadic, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("dyadic has non-finite entries")
    return a


def outer(a, b) -> np.ndarray:
    """Dyadic product ``ab`` (no conjugation), batched over leading axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., :, None] * b[..., None, :]


def cross_matrix(v) -> np.ndarray:
    """Matrix ``[v]x`` such that ``[v]x @ w == v x w``; batched."""
    v = np.asarray(v)
    out = np.zeros(v.shape[:-1] + (3, 3), dtype=np.result_type(v, float))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def unit_vectors(theta, phi) -> np.ndarray:
    """Cartesian unit vectors for arrays of polar/azimuthal angles."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


@dataclass(frozen=True)
class SolidAngle:
    """Direction on the unit sphere, ``theta`` in [0, pi], ``phi`` in [0, 2 pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise InvalidArgumentError(f"theta={self.theta} outside [0, pi]")
        if not (0.0 <= self.phi < 2.0 * math.pi):
            raise InvalidArgumentError(f"phi={self.phi} outside [0, 2pi)")

    @property
    def unit_vector(self) -> np.ndarray:
        return unit_vectors(self.theta, self.phi)

    @classmethod
    def from_vector(cls, u) -> "SolidAngle":
        """Direction of a nonzero real 3-vector."""
        u = np.asarray(u, dtype=float)
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            raise InvalidArgumentError("zero vector has no direction")
        u = u / norm
        theta = math.acos(min(1.0, max(-1.0, u[2])))
        phi = math.atan2(u[1], u[0]) % (2.0 * math.pi)
        if phi >= 2.0 * math.pi:
            phi = 0.0
        return cls(theta, phi)


@dataclass(frozen=True)
class SphereRule:
    """Product quadrature on the unit sphere.

    Attributes
    ----------
    degree : int
        Declared polynomial degree.
    theta, phi : ndarray
        Node angles.
    weights : ndarray
        Positive weights summing to ``4 pi``.
    """

    degree: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    directions: np.ndarray = field(repr=False)

    @property
    def nodes(self) -> list[SolidAngle]:
        return [SolidAngle(float(t), float(p)) for t, p in zip(self.theta, self.phi)]

    def __len__(self) -> int:
        return self.weights.size

    def integrate(self, values) -> np.ndarray:
        """Weighted sum over the leading (node) axis of ``values``."""
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    if n <= 0:
        raise InvalidArgumentError("number of nodes must be positive")
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def sphere_quadrature(degree: int) -> SphereRule:
    """Gauss-Legendre (in cos theta) times trapezoid (in phi) rule.

    Uses ``degree + 1`` Legendre nodes and ``2 degree + 2`` azimuthal nodes,
    which integrates spherical harmonics up to order ``2 degree + 1`` exactly.

    Parameters
    ----------
    degree : int
        Declared degree, must be positive.
    """
    if isinstance(degree, bool) or not isinstance(degree, (int, np.integer)) or degree <= 0:
        raise InvalidArgumentError(f"degree must be a positive integer, got {degree!r}")
    degree = int(degree)
    x, wx = np.polynomial.legendre.leggauss(degree + 1)
    nphi = 2 * degree + 2
    phi1 = 2.0 * np.pi * np.arange(nphi) / nphi
    theta = np.repeat(np.arccos(x), nphi)
    phi = np.tile(phi1, x.size)
    weights = np.repeat(wx, nphi) * (2.0 * np.pi / nphi)
    dirs = unit_vectors(theta, phi)
    for arr in (theta, phi, weights, dirs):
        arr.setflags(write=False)
    return SphereRule(degree, theta, phi, weights, dirs)


# ---------------------------------------------------------------------------
# spherical Bessel functions


@dataclass(frozen=True)
class SphericalBessel:
    """Values of ``j_n``, ``h_n^(1)`` and their derivatives at one argument."""

    order: int
    z: complex
    j: complex
    h: complex | None
    dj: complex
    dh: complex | None


def _miller_start(nmax: int, zmax: float) -> int:
    return int(max(nmax, math.ceil(zmax)) + 20 + math.ceil(6.0 * zmax ** (1.0 / 3.0)))


def spherical_jn_table(nmax: int, z) -> np.ndarray:
    """``j_n(z)`` for ``n = 0..nmax`` on an array of complex arguments.

    Downward (Miller) recurrence is used wherever the requested order exceeds
    ``|z|`` or the argument is far from the real axis; upward recurrence
    otherwise.

    Returns
    -------
    ndarray
        Shape ``z.shape + (nmax + 1,)``.
    """
    if nmax < 0:
        raise InvalidArgumentError("nmax must be non-negative")
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    zf = z.ravel()
    m = max(nmax, 1)
    out = np.zeros((zf.size, m + 1), dtype=complex)
    zero = zf == 0
    out[zero, 0] = 1.0
    az = np.abs(zf)
    upward = (~zero) & (az > nmax + 2) & (np.abs(zf.imag) <= 1.0)
    miller = (~zero) & (~upward)

    if np.any(upward):
        zu = zf[upward]
        j = np.empty((zu.size, m + 1), dtype=complex)
        j[:, 0] = np.sin(zu) / zu
        j[:, 1] = np.sin(zu) / zu**2 - np.cos(zu) / zu
        for n in range(1, m):
            j[:, n + 1] = (2 * n + 1) / zu * j[:, n] - j[:, n - 1]
        out[upward] = j

    if np.any(miller):
        zm = zf[miller]
        nstart = _miller_start(m, float(np.max(np.abs(zm))))
        f = np.zeros((zm.size, m + 1), dtype=complex)
        fnext = np.zeros(zm.size, dtype=complex)
        fcur = np.full(zm.size, 1e-30, dtype=complex)
        if nstart <= m:
            f[:, nstart] = fcur
        for n in range(nstart, 0, -1):
            fprev = (2 * n + 1) / zm * fcur - fnext
            if n - 1 <= m:
                f[:, n - 1] = fprev
            big = np.abs(fprev) > 1e200
            if np.any(big):
                fprev[big] *= 1e-200
                fcur[big] *= 1e-200
                f[big] *= 1e-200
            fnext, fcur = fcur, fprev
        j0 = np.sin(zm) / zm
        small = np.abs(zm) < 1e-3
        j1 = np.where(
            small,
            zm / 3.0 - zm**3 / 30.0,
            np.sin(zm) / zm**2 - np.cos(zm) / np.where(small, 1.0, zm),
        )
        use0 = np.abs(j0) >= np.abs(j1)
        scale = np.where(use0, j0 / f[:, 0], j1 / f[:, 1])
        out[miller] = f * scale[:, None]
    return out[:, : nmax + 1].reshape(shape + (nmax + 1,))


def spherical_hn_table(nmax: int, z) -> np.ndarray:
    """``h_n^(1)(z)`` for ``n = 0..nmax`` by upward recurrence.

    Raises
    ------
    DomainError
        If any argument is zero.
    """
    if nmax < 0:
        raise InvalidArgumentError("nmax must be non-negative")
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("h_n^(1) is singular at z = 0")
    shape = z.shape
    zf = z.ravel()
    m = max(nmax, 1)
    h = np.empty((zf.size, m + 1), dtype=complex)
    e = np.exp(1j * zf)
    h[:, 0] = -1j * e / zf
    h[:, 1] = -e * (zf + 1j) / zf**2
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, m):
            h[:, n + 1] = (2 * n + 1) / zf * h[:, n] - h[:, n - 1]
    return h[:, : nmax + 1].reshape(shape + (nmax + 1,))


def _derivative_table(table: np.ndarray, z: np.ndarray) -> np.ndarray:
    """d/dz of a spherical Bessel table via ``z_n' = z_{n-1} - (n+1) z_n / z``."""
    n = np.arange(table.shape[-1])
    d = np.empty_like(table)
    d[..., 0] = -table[..., 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        d[..., 1:] = table[..., :-1] - (n[1:] + 1) * table[..., 1:] / z[..., None]
    return d


def spherical_bessel_jh(order: int, z: complex, *, want_h: bool = True) -> SphericalBessel:
    """Spherical Bessel ``j_n`` and Hankel ``h_n^(1)`` with derivatives.

    Parameters
    ----------
    order : int
        Non-negative order ``n``.
    z : complex
        Argument.
    want_h : bool
        Set to False to evaluate ``j_n`` only (allowed at ``z = 0``).
    """
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)) or order < 0:
        raise InvalidArgumentError(f"order must be a non-negative integer, got {order!r}")
    order = int(order)
    z = complex(z)
    if z == 0:
        if want_h:
            raise DomainError("h_n^(1) is singular at z = 0")
        return SphericalBessel(order, z, 1.0 if order == 0 else 0.0, None,
                               1.0 / 3.0 if order == 1 else 0.0, None)
    za = np.array([z])
    jt = spherical_jn_table(order + 1, za)
    dj = _derivative_table(jt, za)
    h = dh = None
    if want_h:
        ht = spherical_hn_table(order + 1, za)
        dht = _derivative_table(ht, za)
        h, dh = complex(ht[0, order]), complex(dht[0, order])
    return SphericalBessel(order, z, complex(jt[0, order]), h, complex(dj[0, order]), dh)


# ---------------------------------------------------------------------------
# line integrals


def adaptive_panel_integrate(
    f: Callable[[np.ndarray], np.ndarray],
    edges: Sequence[float],
    *,
    rtol: float = 1e-10,
    atol: float = 0.0,
    order: int = 16,
    max_panels: int = 200_000,
) -> np.ndarray:
    """Adaptive composite Gauss-Legendre integration.

    Each panel is accepted when its ``order``-point estimate agrees with the
    sum of the two half-panel estimates; otherwise it is bisected.

    Parameters
    ----------
    f : callable
        Vectorized integrand, ``f(x)`` returns an array whose leading axis
        matches ``x``.
    edges : sequence of float
        Sorted panel boundaries (at least two).
    """
    edges = np.asarray(sorted(set(float(e) for e in edges)), dtype=float)
    if edges.size < 2:
        raise InvalidArgumentError("need at least two panel edges")
    xg, wg = np.polynomial.legendre.leggauss(order)
    a = edges[:-1]
    b = edges[1:]
    total_length = edges[-1] - edges[0]

    def panel_sums(lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        vals = np.asarray(f(x))
        vals = vals.reshape((lo.size, order) + vals.shape[1:])
        hw = half[:, None] * wg[None, :]
        mags = np.abs(vals).reshape(lo.size, order, -1).max(axis=2)
        return np.einsum("pk,pk...->p...", hw, vals), (hw * mags).sum(axis=1)

    coarse, _ = panel_sums(a, b)
    accepted = np.zeros(coarse.shape[1:], dtype=coarse.dtype)
    scale = float(np.max(np.abs(coarse.sum(axis=0)))) if coarse.size else 0.0
    count = a.size
    while a.size:
        mid = 0.5 * (a + b)
        left, lmag = panel_sums(a, mid)
        right, rmag = panel_sums(mid, b)
        fine = left + right
        err = np.abs(fine - coarse).reshape(a.size, -1).max(axis=1)
        scale = max(scale, float(np.max(np.abs(accepted + fine.sum(axis=0)))))
        allowed = np.maximum(atol, rtol * scale) * (b - a) / total_length
        # roundoff floor from the integral of |f|, which cancellation does not shrink
        ok = err <= np.maximum(allowed, 64 * np.finfo(float).eps * (lmag + rmag))
        accepted = accepted + fine[ok].sum(axis=0)
        bad = ~ok
        if not np.any(bad):
            break
        count += int(bad.sum())
        if count > max_panels:
            raise ConvergenceFailure(
                "adaptive panel integration exceeded the panel budget",
                {"panels": count, "unresolved": int(bad.sum()), "partial": accepted},
            )
        a = np.concatenate([a[bad], mid[bad]])
        b = np.concatenate([mid[bad], b[bad]])
        coarse = np.concatenate([left[bad], right[bad]])
        order_idx = np.argsort(a, kind="stable")
        a, b, coarse = a[order_idx], b[order_idx], coarse[order_idx]
    return accepted


def richardson(params: Sequence[float], values: Sequence[np.ndarray]):
    """Neville extrapolation of ``values(param)`` to ``param -> 0``.

    Returns
    -------
    diagonal : list of ndarray
        Successive extrapolants, each built from the smallest parameters
        available (the first is the raw value at the smallest parameter).
    """
    p = np.asarray(params, dtype=float)
    table = [np.asarray(v) for v in values]
    diagonal = [table[-1]]
    for j in range(1, len(table)):
        table = [
            table[i + 1] + (table[i + 1] - table[i]) * p[i + j] / (p[i] - p[i + j])
            for i in range(len(table) - 1)
        ]
        diagonal.append(table[-1])
    return diagonal


@dataclass(frozen=True)
class RegularizedIntegral:
    """Result of :func:`line_integrate_regularized`.

    Attributes
    ----------
    value : complex or ndarray
        Extrapolated ``delta -> 0`` value.
    error : float
        Larger of the last two max-abs differences between successive
        extrapolants.
    deltas : tuple of float
        Regulator values that entered the extrapolation.
    raw : tuple
        Regulated integrals for ``deltas``.
    extrapolants : tuple
        Successive Richardson extrapolants.
    excluded : tuple of float
        Regulator values rejected because ``exp(-delta*cutoff)`` had not
        decayed at the cutoff.
    """

    value: object
    error: float
    deltas: tuple
    raw: tuple
    extrapolants: tuple
    excluded: tuple = ()


def line_integrate_regularized(
    f: Callable,
    delta_values: Sequence[float],
    cutoff: float,
    *,
    breakpoints: Sequence[float] = (),
    panels: int = 64,
    rtol: float = 1e-11,
    atol: float = 0.0,
    tail_tolerance: float = 1e-4,
    delta_dependent: bool = False,
) -> RegularizedIntegral:
    """Abel-regularized line integral ``int_0^cutoff f(w) exp(-delta w) dw``.

    The integral is computed for each regulator ``delta`` by adaptive panels,
    then extrapolated to ``delta -> 0`` with a Richardson table whose leading
    error term is linear in ``delta``.  Regulator values for which the damped
    integrand has not decayed by ``tail_tolerance`` (relative to its peak) at
    the cutoff are dropped, because the truncated integral would then differ
    from the regularized infinite one.

    Parameters
    ----------
    f : callable
        Vectorized integrand ``f(w)`` (or ``f(w, delta)`` when
        ``delta_dependent``) returning arrays with leading axis ``len(w)``.
    delta_values : sequence of float
        Positive regulators.
    cutoff : float
        Upper integration limit.
    breakpoints : sequence of float
        Extra panel boundaries (near-singular features).
    panels : int
        Number of initial uniform panels.

    Raises
    ------
    ConvergenceFailure
        If fewer than two regulators survive or the extrapolants diverge.
    """
    deltas = [float(d) for d in delta_values]
    if len(deltas) < 3 or any(d <= 0 for d in deltas):
        raise InvalidArgumentError("delta_values must hold at least three positive values")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise InvalidArgumentError("delta_values must be strictly decreasing")
    if not cutoff > 0:
        raise InvalidArgumentError("cutoff must be positive")
    edges = list(np.linspace(0.0, cutoff, panels + 1))
    edges += [float(p) for p in breakpoints if 0.0 < p < cutoff]

    probe = np.linspace(0.0, cutoff, 4097)[1:]
    tail = probe >= 0.95 * cutoff
    kept, excluded = [], []
    base = None if delta_dependent else np.abs(np.asarray(f(probe))).reshape(probe.size, -1).max(axis=1)
    for d in deltas:
        mag = base if base is not None else \
            np.abs(np.asarray(f(probe, d))).reshape(probe.size, -1).max(axis=1)
        damped = mag * np.exp(-d * probe)
        peak = float(damped.max())
        if peak == 0.0 or float(damped[tail].max()) <= tail_tolerance * peak:
            kept.append(d)
        else:
            excluded.append(d)
    if len(kept) < 2:
        raise ConvergenceFailure(
            "regulator does not decay before the cutoff for enough delta values",
            {"kept": kept, "excluded": excluded},
        )

    if delta_dependent:
        def damped(w, d):
            v = np.asarray(f(w, d))
            return v * np.exp(-d * w).reshape((w.size,) + (1,) * (v.ndim - 1))

        raw = [adaptive_panel_integrate(lambda w, d=d: damped(w, d), edges, rtol=rtol, atol=atol)
               for d in kept]
    else:
        dk = np.asarray(kept)

        def g(w):
            v = np.asarray(f(w))
            damp = np.exp(-np.outer(w, dk))
            return v[..., None] * damp.reshape((w.size,) + (1,) * (v.ndim - 1) + (dk.size,))

        both = adaptive_panel_integrate(g, edges, rtol=rtol, atol=atol)
        raw = [both[..., i] for i in range(len(kept))]

    diag = richardson(kept, raw)
    errors = [float(np.max(np.abs(diag[i] - diag[i - 1]))) for i in range(1, len(diag))]
    scale = max(float(np.max(np.abs(x))) for x in diag)
    floor = 1e3 * np.finfo(float).eps * max(scale, 1e-300)
    partial = {"deltas": kept, "raw": raw, "extrapolants": diag, "errors": errors}
    if len(errors) >= 2 and errors[-1] > errors[-2] and errors[-1] > floor:
        raise ConvergenceFailure("Richardson extrapolants diverge as delta -> 0", partial)
    value = diag[-1]
    if np.ndim(value) == 0:
        value = complex(value) if np.iscomplexobj(value) else float(value)
    # the last difference alone can undershoot when an extrapolant lands near the limit
    error = max(errors[-2:]) if errors else math.inf
    return RegularizedIntegral(value, error, tuple(kept), tuple(raw), tuple(diag), tuple(excluded))

