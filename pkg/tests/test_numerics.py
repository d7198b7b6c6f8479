from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlnf_verify.errors import ConvergenceFailure, DomainError, InvalidArgumentError
from mlnf_verify.numerics import (
    CONSTANTS,
    IDENTITY,
    SolidAngle,
    adaptive_panel_integrate,
    as_dyadic,
    as_vector,
    cross_matrix,
    gauss_legendre,
    line_integrate_regularized,
    outer,
    richardson,
    sphere_quadrature,
    spherical_bessel_jh,
    spherical_hn_table,
    spherical_jn_table,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
dyadics = st.lists(finite, min_size=18, max_size=18).map(
    lambda v: np.array(v[:9]).reshape(3, 3) + 1j * np.array(v[9:]).reshape(3, 3))


def sphere_moment(a: int, b: int, c: int) -> float:
    """Closed-form integral of ux^a uy^b uz^c over the unit sphere."""
    if a % 2 or b % 2 or c % 2:
        return 0.0

    def dfact(n):
        return math.prod(range(n, 0, -2)) if n > 0 else 1

    return 4 * math.pi * dfact(a - 1) * dfact(b - 1) * dfact(c - 1) / dfact(a + b + c + 1)


# -- constants and dyadic algebra ------------------------------------------------


def test_constants_consistent():
    c = CONSTANTS
    assert abs(c.c**2 * c.eps0 * c.mu0 - 1.0) < 1e-9
    assert c.wavenumber(c.c) == pytest.approx(1.0)


@given(dyadics, dyadics, dyadics)
def test_dyadic_algebra(A, B, C):
    scale = 1 + np.abs(A).max() * np.abs(B).max() * np.abs(C).max()
    assert np.abs((A @ B) @ C - A @ (B @ C)).max() <= 1e-13 * scale
    assert np.array_equal(A.T.T, A)
    assert np.array_equal(A.conj().conj(), A)
    assert np.abs((A @ B).T - B.T @ A.T).max() <= 1e-14 * (1 + np.abs(A).max() * np.abs(B).max())


def test_vector_validation():
    with pytest.raises(InvalidArgumentError):
        as_vector([1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        as_vector([1.0, np.nan, 0.0])
    with pytest.raises(InvalidArgumentError):
        as_dyadic(np.ones((2, 3)))


def test_cross_matrix_and_outer():
    a = np.array([0.3, -1.2, 2.0])
    b = np.array([1.5, 0.1, -0.7])
    assert np.allclose(cross_matrix(a) @ b, np.cross(a, b))
    assert np.allclose(outer(a, b), np.outer(a, b))


# -- sphere geometry ------------------------------------------------------------


@given(st.floats(0, math.pi), st.floats(0, 2 * math.pi, exclude_max=True))
def test_solid_angle_unit_vector(theta, phi):
    u = SolidAngle(theta, phi).unit_vector
    assert abs(np.linalg.norm(u) - 1.0) < 1e-14


def test_solid_angle_round_trip():
    u = np.array([0.48, -0.6, 0.64])
    assert np.allclose(SolidAngle.from_vector(u).unit_vector, u, atol=1e-15)
    with pytest.raises(InvalidArgumentError):
        SolidAngle(4.0, 0.0)


def test_sphere_rule_weights():
    for d in (1, 2, 8, 31):
        assert abs(sphere_quadrature(d).weights.sum() - 4 * math.pi) < 1e-12


def test_sphere_rule_second_moment():
    rule = sphere_quadrature(8)
    assert abs(rule.integrate(rule.directions[:, 2] ** 2) - 4 * math.pi / 3) < 1e-13


@pytest.mark.parametrize("degree", [0, -3, 2.5, True])
def test_sphere_rule_rejects_bad_degree(degree):
    with pytest.raises(InvalidArgumentError):
        sphere_quadrature(degree)


@given(st.integers(1, 14), st.data())
def test_sphere_rule_monomial_exactness(degree, data):
    a = data.draw(st.integers(0, degree))
    b = data.draw(st.integers(0, degree - a))
    c = data.draw(st.integers(0, degree - a - b))
    rule = sphere_quadrature(degree)
    u = rule.directions
    val = rule.integrate(u[:, 0] ** a * u[:, 1] ** b * u[:, 2] ** c)
    assert abs(val - sphere_moment(a, b, c)) < 1e-12


def test_sphere_rule_plane_wave_projector():
    # int do exp(-i s.u)(I - uu) = 4 pi [(j0 - j1/s) I + (3 j1/s - j0) ss]
    s_vec = np.array([0.4, -0.9, 1.1])
    s = np.linalg.norm(s_vec)
    sh = s_vec / s
    rule = sphere_quadrature(16)
    u = rule.directions
    vals = np.exp(-1j * (u @ s_vec))[:, None, None] * (np.eye(3) - u[:, :, None] * u[:, None, :])
    got = rule.integrate(vals)
    j0 = math.sin(s) / s
    j1 = math.sin(s) / s**2 - math.cos(s) / s
    want = 4 * math.pi * ((j0 - j1 / s) * np.eye(3) + (3 * j1 / s - j0) * np.outer(sh, sh))
    assert np.abs(got - want).max() < 1e-13


def test_gauss_legendre_interval():
    x, w = gauss_legendre(5, 0.0, 2.0)
    assert np.all((x > 0) & (x < 2))
    assert abs(np.sum(w * x**4) - 32 / 5) < 1e-13


# -- spherical Bessel functions --------------------------------------------------


def test_bessel_order_zero_closed_form():
    z = 1.3 - 0.4j
    b = spherical_bessel_jh(0, z)
    assert abs(b.j - np.sin(z) / z) < 1e-15
    assert abs(b.h - (-1j) * np.exp(1j * z) / z) < 1e-15


def test_bessel_wronskian_example():
    z = 2 + 0.5j
    b = spherical_bessel_jh(1, z)
    w = b.j * b.dh - b.dj * b.h
    assert abs(w - 1j / z**2) / abs(1 / z**2) < 1e-12


def test_bessel_high_order_small_argument():
    b = spherical_bessel_jh(20, 1.0)
    mp.mp.dps = 30
    want = mp.sqrt(mp.pi / 2) * mp.besselj(20.5, 1)
    assert np.isfinite(b.j) and np.isfinite(b.h)
    assert abs(b.j - float(want)) / float(want) < 1e-12


def test_bessel_h_singular_at_origin():
    with pytest.raises(DomainError):
        spherical_bessel_jh(2, 0.0)
    assert spherical_bessel_jh(0, 0.0, want_h=False).j == 1.0
    with pytest.raises(InvalidArgumentError):
        spherical_bessel_jh(-1, 1.0)


@given(st.integers(0, 50), st.floats(0.1, 50), st.floats(0, math.pi / 2))
def test_bessel_wronskian(order, modulus, arg):
    z = modulus * np.exp(1j * arg)
    b = spherical_bessel_jh(order, z)
    w = b.j * b.dh - b.dj * b.h
    assert abs(w - 1j / z**2) / abs(1 / z**2) < 1e-10


@pytest.mark.parametrize("z", [0.7, 3.0 + 0.4j, 12.0 + 2.0j, 0.2 + 1.5j, 25.0])
def test_bessel_tables_against_mpmath(z):
    mp.mp.dps = 50
    jt = spherical_jn_table(30, np.array([z]))[0]
    ht = spherical_hn_table(30, np.array([z]))[0]
    zz = mp.mpc(complex(z))
    for n in (0, 1, 5, 17, 30):
        jn = mp.sqrt(mp.pi / (2 * zz)) * mp.besselj(n + 0.5, zz)
        hn = mp.sqrt(mp.pi / (2 * zz)) * mp.hankel1(n + 0.5, zz)
        assert abs(jt[n] - complex(jn)) <= 1e-12 * abs(complex(jn))
        assert abs(ht[n] - complex(hn)) <= 1e-12 * abs(complex(hn))


# -- line integrals --------------------------------------------------------------


def test_adaptive_panels_polynomial():
    v = adaptive_panel_integrate(lambda x: x**5, [0.0, 1.0, 2.0])
    assert abs(v - 64 / 6) < 1e-12


def test_regularized_exponential():
    # the regulated value 1/(1 + delta) is not polynomial, so small regulators are needed
    res = line_integrate_regularized(lambda w: np.exp(-w), [0.004, 0.002, 0.001, 0.0005], 30.0)
    assert abs(res.value - (1 - math.exp(-30.0))) < 1e-10


def test_regularized_cosine_vanishes():
    res = line_integrate_regularized(lambda w: np.cos(5 * w), [0.2, 0.1, 0.05, 0.025], 200.0)
    assert abs(res.value) < 1e-3


def test_regularized_delta_dependent_matches_plain():
    f = lambda w: np.sin(3 * w) * w  # noqa: E731
    a = line_integrate_regularized(f, [0.2, 0.1, 0.05], 400.0)
    b = line_integrate_regularized(lambda w, d: f(w), [0.2, 0.1, 0.05], 400.0, delta_dependent=True)
    assert abs(a.value - b.value) < 1e-10
    # Abel value: Im 1/(delta - 3i)^2 -> Im(-1/9) = 0
    assert abs(a.value) < 1e-2


@given(st.floats(0.5, 4.0), st.floats(0.5, 3.0))
def test_regularized_laplace_within_reported_error(a, b):
    # int_0^inf exp(-b w) cos(a w) dw = b / (a^2 + b^2)
    try:
        res = line_integrate_regularized(lambda w: np.exp(-b * w) * np.cos(a * w),
                                         [0.08, 0.04, 0.02, 0.01], 60.0)
    except ConvergenceFailure as exc:
        # growing estimates are reported, never silently returned
        errs = exc.partial["errors"]
        assert errs[-1] > errs[-2]
        return
    assert abs(res.value - b / (a * a + b * b)) <= max(res.error, 1e-12)


def test_regularized_excludes_slow_regulators():
    res = line_integrate_regularized(lambda w: np.cos(w), [0.5, 0.2, 0.1, 1e-4], 100.0)
    assert 1e-4 in res.excluded
    with pytest.raises(ConvergenceFailure) as info:
        line_integrate_regularized(lambda w: np.cos(w), [3e-4, 2e-4, 1e-4], 100.0)
    assert "excluded" in info.value.partial


@pytest.mark.parametrize("deltas", [[0.1, 0.05], [0.1, 0.2, 0.05], [0.1, -0.05, -0.1]])
def test_regularized_rejects_bad_schedule(deltas):
    with pytest.raises(InvalidArgumentError):
        line_integrate_regularized(lambda w: np.exp(-w), deltas, 10.0)


def test_richardson_removes_linear_error():
    params = [0.4, 0.2, 0.1]
    vals = [2.0 + 3 * p + 5 * p**2 for p in params]
    assert abs(richardson(params, vals)[-1] - 2.0) < 1e-12


def test_identity_read_only():
    with pytest.raises(ValueError):
        IDENTITY[0, 0] = 2
