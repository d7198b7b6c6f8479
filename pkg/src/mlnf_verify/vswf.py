"""Vector spherical wave functions and two-region sphere coefficients.

Angular functions are the orthonormal vector spherical harmonics
``X_nm = L Y_nm / sqrt(n(n+1))`` (``L = -i r x grad``), assembled in Cartesian
components from ladder operators so that the poles need no special care.
Modes are indexed by ``K = n^2 - 1 + n + m`` for ``n = 1..L``, ``|m| <= n``.

Radial factors are normalized by the same function evaluated on the sphere
surface, ``z_n(k r) / z_n(k a)``, which keeps products of regular and
outgoing functions of high order inside floating-point range.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidArgumentError
from .numerics import spherical_hn_table, spherical_jn_table

__all__ = [
    "mode_indices",
    "VSH",
    "vsh",
    "radial_factors",
    "vswf",
    "MieCoefficients",
    "mie_coefficients",
    "initial_order",
]


def mode_indices(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and order arrays ``(n, m)`` of length ``L (L + 2)``."""
    n = np.concatenate([np.full(2 * l + 1, l) for l in range(1, L + 1)])
    m = np.concatenate([np.arange(-l, l + 1) for l in range(1, L + 1)])
    return n, m


def initial_order(x: float) -> int:
    """Starting truncation order for a sphere of size parameter ``x``."""
    x = max(float(x), 1e-3)
    return int(math.ceil(x + 4.0 * x ** (1.0 / 3.0) + 2.0)) + 4


@dataclass(frozen=True)
class VSH:
    """Scalar and vector spherical harmonics on a set of directions.

    Attributes
    ----------
    Y : ndarray, shape (K, P)
    X : ndarray, shape (K, P, 3)
    u : ndarray, shape (P, 3)
    """

    Y: np.ndarray
    X: np.ndarray
    u: np.ndarray


def vsh(L: int, u) -> VSH:
    """Evaluate ``Y_nm`` and ``X_nm`` for ``n = 1..L`` at unit vectors ``u``.

    Results are cached on ``(L, u)`` and returned as read-only arrays.
    """
    if L < 1:
        raise InvalidArgumentError("L must be >= 1")
    u = np.ascontiguousarray(np.atleast_2d(np.asarray(u, dtype=float)))
    return _vsh_cached(int(L), u.shape, u.tobytes())


@functools.lru_cache(maxsize=16)
def _vsh_cached(L: int, shape: tuple[int, ...], raw: bytes) -> VSH:
    u = np.frombuffer(raw, dtype=float).reshape(shape)
    theta = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
    phi = np.arctan2(u[:, 1], u[:, 0])
    # one extra order keeps m +- 1 lookups from wrapping
    table = special.sph_harm_y_all(L, L + 1, theta, phi)
    n, m = mode_indices(L)
    Y = table[n, m]
    Yp = table[n, m + 1]
    Ym = table[n, m - 1]
    cp = np.sqrt((n - m) * (n + m + 1.0))[:, None]
    cm = np.sqrt((n + m) * (n - m + 1.0))[:, None]
    norm = 1.0 / np.sqrt(n * (n + 1.0))[:, None]
    X = np.empty(Y.shape + (3,), dtype=complex)
    X[..., 0] = 0.5 * (cp * Yp + cm * Ym) * norm
    X[..., 1] = -0.5j * (cp * Yp - cm * Ym) * norm
    X[..., 2] = m[:, None] * Y * norm
    for arr in (Y, X):
        arr.setflags(write=False)
    return VSH(Y, X, u)


def radial_factors(L: int, kind: str, k: complex, r, x_norm: complex | None = None):
    """Normalized radial factors of ``M`` and ``N`` for ``n = 1..L``.

    Returns ``(a, b, c)`` of shape ``(L, P)`` with

        a = z_n(x) / s_n,  b = [x z_n(x)]' / (x s_n),  c = z_n(x) / (x s_n),

    where ``x = k r``, ``z`` is ``j`` (``kind='j'``) or ``h^(1)`` (``kind='h'``)
    and ``s_n = z_n(x_norm)`` (1 when ``x_norm`` is None).
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    x = complex(k) * r
    table = {"j": spherical_jn_table, "h": spherical_hn_table}[kind]
    z = table(L, x)  # (P, L+1)
    n = np.arange(1, L + 1)
    zn = z[:, 1:]
    zprev = z[:, :-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = x[:, None]
        a = zn
        b = zprev - n * zn / xs
        c = zn / xs
    origin = x == 0
    if np.any(origin):
        b[origin] = np.where(n == 1, 2.0 / 3.0, 0.0)
        c[origin] = np.where(n == 1, 1.0 / 3.0, 0.0)
    if x_norm is not None:
        s = table(L, np.array([complex(x_norm)]))[0, 1:]
        a, b, c = a / s, b / s, c / s
    return a.T, b.T, c.T


def vswf(L: int, kind: str, k: complex, points, *, x_norm: complex | None = None,
         conjugate: bool = False):
    """Vector spherical wave functions ``M``, ``N`` at Cartesian points.

    Parameters
    ----------
    L : int
        Highest degree.
    kind : {'j', 'h'}
        Regular or outgoing radial function.
    k : complex
        Wavenumber of the region.
    points : array_like, shape (P, 3)
    x_norm : complex, optional
        Radial normalization argument (``k a``).
    conjugate : bool
        Conjugate the angular factors only (the "barred" functions of the
        bilinear Green's function expansion).

    Returns
    -------
    M, N : ndarray, shape (K, P, 3)
        With ``curl M = k N`` and ``curl N = k M``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(pts, axis=1)
    u = np.where(r[:, None] > 0, pts / np.where(r > 0, r, 1.0)[:, None], [0.0, 0.0, 1.0])
    h = vsh(L, u)
    X, Y = h.X, h.Y
    if conjugate:
        X, Y = X.conj(), -Y.conj()
    a, b, c = radial_factors(L, kind, k, r, x_norm)
    n, _ = mode_indices(L)
    rows = n - 1
    a, b, c = a[rows], b[rows], c[rows]
    M = a[..., None] * X
    uxX = np.cross(u[None, :, :], X)
    N = b[..., None] * uxX + (1j * np.sqrt(n * (n + 1.0)))[:, None, None] * (c * Y)[..., None] * u[None]
    return M, N


@dataclass(frozen=True)
class MieCoefficients:
    """Scaled two-region coefficients for ``n = 1..L``.

    With ``j0 = j_n(k0 a)``, ``h0 = h_n(k0 a)``, ``j1 = j_n(k1 a)``:

    * ``tau = T h0^2``: exterior source, exterior field.
    * ``gamma = C j1 h0``: exterior source, interior field.
    * ``delta = D h0 j1``: interior source, exterior field.
    * ``rho = R j1^2``: interior source, interior field.

    ``h0`` and ``j1`` are kept to undo the scaling where needed.
    """

    L: int
    k0a: float
    k1a: complex
    eps: complex
    mu: complex
    tauM: np.ndarray
    tauN: np.ndarray
    gammaM: np.ndarray
    gammaN: np.ndarray
    deltaM: np.ndarray
    deltaN: np.ndarray
    rhoM: np.ndarray
    rhoN: np.ndarray
    h0: np.ndarray
    j1: np.ndarray

    def expand(self, name: str) -> np.ndarray:
        """Broadcast a per-degree array to the ``K`` mode index."""
        n, _ = mode_indices(self.L)
        return getattr(self, name)[n - 1]


@functools.lru_cache(maxsize=256)
def mie_coefficients(k0a: float, eps: complex, mu: complex, L: int) -> MieCoefficients:
    """Sphere coefficients in overflow-safe scaled form (cached).

    The refractive index is ``sqrt(eps mu)`` on the principal branch.
    """
    eps, mu = complex(eps), complex(mu)
    k1a = k0a * np.sqrt(eps * mu)
    x0 = np.array([complex(k0a)])
    x1 = np.array([complex(k1a)])
    jt0 = spherical_jn_table(L, x0)[0]
    ht0 = spherical_hn_table(L, x0)[0]
    jt1 = spherical_jn_table(L, x1)[0]
    ht1 = spherical_hn_table(L, x1)[0]
    n = np.arange(1, L + 1)
    x0s, x1s = complex(k0a), complex(k1a)

    def parts(t, x):
        z = t[1:]
        psi = x * t[:-1] - n * t[1:]  # [x z_n(x)]'
        return z, psi

    j0, pj0 = parts(jt0, x0s)
    h0, ph0 = parts(ht0, x0s)
    j1, pj1 = parts(jt1, x1s)
    h1, ph1 = parts(ht1, x1s)
    Lj1 = pj1 / j1
    Lh0 = ph0 / h0
    j0h0 = j0 * h0
    pj0h0 = pj0 * h0
    j1h1 = j1 * h1
    ph1j1 = ph1 * j1
    kr = k1a / k0a

    def outer(m):
        return (Lj1 * j0h0 - m * pj0h0) / (m * Lh0 - Lj1)

    def inner(m):
        return (m * Lh0 * j1h1 - ph1j1) / (Lj1 - m * Lh0)

    tauM, tauN = outer(mu), outer(eps)
    rhoM, rhoN = inner(mu), inner(eps)
    gammaM = j0h0 + tauM
    gammaN = mu / kr * (j0h0 + tauN)
    deltaM = j1h1 + rhoM
    deltaN = kr / mu * (j1h1 + rhoN)
    return MieCoefficients(L, float(k0a), complex(k1a), eps, mu, tauM, tauN, gammaM, gammaN,
                           deltaM, deltaN, rhoM, rhoN, h0, j1)
