from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import EXTERIOR_PAIRS, INTERIOR_POINTS, OMEGA, RADIUS, lossy_material, random_rotation
from mlnf_verify.dispersion import VACUUM, DispersionModel, Material, epsilon
from mlnf_verify.errors import (
    CoincidenceError,
    DomainError,
    InvalidArgumentError,
    SurfaceAmbiguityError,
)
from mlnf_verify.green import (
    Homogeneous,
    SphereInVacuum,
    Vacuum,
    aux_dyadics,
    farfield_amplitude,
    farfield_amplitudes,
    green,
    medium_wavenumber,
    scaled_dyadics,
    vacuum_green,
)
from mlnf_verify.numerics import CONSTANTS

K0 = OMEGA / CONSTANTS.c
LOSSY = Homogeneous(lossy_material(2 + 1j, 1.5 + 0.3j))
points = st.lists(st.floats(-3, 3), min_size=3, max_size=3).map(np.array)


def _curl_fd(fun, p, h):
    """Curl acting on the first index of a (3, 3) dyadic field, by central differences."""
    D = np.zeros((3, 3, 3), dtype=complex)  # derivative direction, row, column
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        D[a] = (fun(p + e) - fun(p - e)) / (2 * h)
    out = np.empty((3, 3), dtype=complex)
    out[0] = D[1, 2] - D[2, 1]
    out[1] = D[2, 0] - D[0, 2]
    out[2] = D[0, 1] - D[1, 0]
    return out


def _all_region_pairs():
    ext = [np.array(p) for p in EXTERIOR_PAIRS[0]]
    ins = [np.array(p) for p in INTERIOR_POINTS]
    return [(ext[0], ext[1]), (ext[0], ins[0]), (ins[1], ext[1]), (ins[0], ins[1])]


# -- closed forms --------------------------------------------------------------------


def test_vacuum_closed_form_example():
    g = vacuum_green(1.0, np.array([1.0, 0.0, 0.0])).value
    pref = np.exp(1j) / (4 * math.pi)
    want = pref * (1j * np.eye(3) + (2 - 3j) * np.diag([1.0, 0.0, 0.0]))
    assert np.abs(g - want).max() < 1e-15


def test_vacuum_far_behaviour():
    R = np.array([0.0, 0.0, 500.0])
    g = vacuum_green(1.0, R).value
    want = np.exp(500j) / (4 * math.pi * 500) * np.diag([1.0, 1.0, 0.0])
    # corrections are O(1/s), the longitudinal one 2/s
    assert np.abs(g - want).max() < 2.5 / 500 * np.abs(want).max()


def test_homogeneous_is_mu_times_vacuum():
    k, _, m = medium_wavenumber(LOSSY.material, OMEGA)
    r, rp = np.array([0.4, 0.2, -1.0]), np.array([-0.3, 0.8, 0.1])
    g = green(LOSSY, OMEGA, r, rp).value
    assert np.allclose(g, m * vacuum_green(k, r - rp).value, rtol=1e-15, atol=0)
    assert k.imag > 0


@pytest.mark.parametrize("material", [VACUUM, Material(DispersionModel.matched(OMEGA))])
def test_empty_sphere_equals_vacuum(material):
    sphere = SphereInVacuum(RADIUS, material)
    for r, rp in _all_region_pairs():
        g = green(sphere, OMEGA, r, rp).value
        g0 = vacuum_green(K0, r - rp).value
        assert np.abs(g - g0).max() <= 1e-13 * np.abs(g0).max()


# -- reciprocity and symmetry -----------------------------------------------------------


@pytest.mark.parametrize("sphere", ["dielectric_sphere", "magnetic_sphere"])
def test_sphere_reciprocity_all_regions(sphere, request):
    geo = request.getfixturevalue(sphere)
    for r, rp in _all_region_pairs():
        a = green(geo, OMEGA, r, rp)
        b = green(geo, OMEGA, rp, r)
        assert np.abs(a.value - b.value.T).max() <= 1e-12 * np.abs(a.value).max()
        # the source-side curl is minus the transposed field-side curl of the swapped pair
        assert np.abs(a.curl_rprime + b.curl_r.T).max() <= 1e-11 * np.abs(a.curl_r).max()


def test_curl_reciprocity_vacuum():
    r, rp = np.array([0.4, -1.0, 0.3]), np.array([1.2, 0.1, -0.5])
    a, b = green(Vacuum(), OMEGA, r, rp), green(Vacuum(), OMEGA, rp, r)
    assert np.abs(a.curl_rprime + b.curl_r.T).max() < 1e-16


@given(points, points)
def test_reciprocity_unbounded(r, rp):
    if np.linalg.norm(r - rp) < 1e-3:
        return
    for geo in (Vacuum(), LOSSY):
        a = green(geo, OMEGA, r, rp).value
        b = green(geo, OMEGA, rp, r).value
        assert np.abs(a - b.T).max() <= 1e-14 * np.abs(a).max()


@given(st.integers(0, 10_000))
def test_sphere_rotation_covariance(seed):
    Q = random_rotation(seed)
    r, rp = (np.array(p) for p in EXTERIOR_PAIRS[0])
    geo = SphereInVacuum(RADIUS, lossy_material())
    a = green(geo, OMEGA, Q @ r, Q @ rp).value
    b = Q @ green(geo, OMEGA, r, rp).value @ Q.T
    assert np.abs(a - b).max() <= 1e-12 * np.abs(b).max()


# -- differential equation and interface ------------------------------------------------


@pytest.mark.parametrize("geo", [Vacuum(), LOSSY], ids=["vacuum", "homogeneous"])
def test_helmholtz_unbounded(geo):
    r, rp = np.array([0.9, -0.5, 1.3]), np.array([0.1, 0.2, -0.2])
    if isinstance(geo, Vacuum):
        k, e, m = K0, 1.0, 1.0
    else:
        k, e, m = medium_wavenumber(geo.material, OMEGA)
    h = 1e-4 * 2 * math.pi / K0
    cc = _curl_fd(lambda p: green(geo, OMEGA, p, rp).curl_r, r, h) / m
    g = green(geo, OMEGA, r, rp).value
    resid = cc - (K0**2) * e * g
    assert np.abs(resid).max() < 1e-6 * K0**2 * abs(e) * np.abs(g).max()
    # the analytic curl agrees with differentiating the value
    curl = _curl_fd(lambda p: green(geo, OMEGA, p, rp).value, r, h)
    assert np.abs(curl - green(geo, OMEGA, r, rp).curl_r).max() < 1e-6 * np.abs(curl).max()


@pytest.mark.parametrize("field_point", [(0.3, 2.6, 0.9), (0.2, 0.1, -0.3)], ids=["outside", "inside"])
def test_helmholtz_sphere(magnetic_sphere, field_point):
    r = np.array(field_point)
    rp = np.array(EXTERIOR_PAIRS[0][1])
    inside = np.linalg.norm(r) < RADIUS
    e, m = medium_wavenumber(magnetic_sphere.material, OMEGA)[1:] if inside else (1.0, 1.0)
    h = 1e-4 * 2 * math.pi / K0
    cc = _curl_fd(lambda p: green(magnetic_sphere, OMEGA, p, rp, lmax=30).curl_r, r, h) / m
    g = green(magnetic_sphere, OMEGA, r, rp, lmax=30).value
    assert np.abs(cc - K0**2 * e * g).max() < 1e-6 * K0**2 * abs(e) * np.abs(g).max()


def test_interface_continuity(magnetic_sphere):
    # tangential G and tangential (1/mu) curl G are continuous across r = a
    rp = np.array(EXTERIOR_PAIRS[0][1])
    u = np.array([0.36, -0.48, 0.8])
    eta = 1e-7
    _, _, m = medium_wavenumber(magnetic_sphere.material, OMEGA)
    gin = green(magnetic_sphere, OMEGA, (1 - eta) * RADIUS * u, rp, lmax=80)
    gout = green(magnetic_sphere, OMEGA, (1 + eta) * RADIUS * u, rp, lmax=80)
    P = np.eye(3) - np.outer(u, u)
    scale = np.abs(gout.value).max()
    assert np.abs(P @ (gin.value - gout.value)).max() < 1e-5 * scale
    scale_c = np.abs(gout.curl_r).max()
    assert np.abs(P @ (gin.curl_r / m - gout.curl_r)).max() < 1e-5 * scale_c
    # normal D = eps E jumps consistently
    e = complex(epsilon(magnetic_sphere.material, OMEGA))
    assert np.abs(u @ (e * gin.value - gout.value)).max() < 1e-5 * scale


def test_truncation_is_converged(dielectric_sphere):
    r, rp = (np.array(p) for p in EXTERIOR_PAIRS[1])
    a = green(dielectric_sphere, OMEGA, r, rp, lmax=30).value
    b = green(dielectric_sphere, OMEGA, r, rp, lmax=34).value
    assert np.abs(a - b).max() < 1e-10 * np.abs(b).max()
    c = green(dielectric_sphere, OMEGA, r, rp).value
    assert np.abs(c - b).max() < 1e-10 * np.abs(b).max()


# -- errors --------------------------------------------------------------------------


def test_coincident_points_rejected(dielectric_sphere):
    for geo in (Vacuum(), LOSSY, dielectric_sphere):
        with pytest.raises(CoincidenceError):
            green(geo, OMEGA, [0.1, 0.2, 0.3], [0.1, 0.2, 0.3])


def test_surface_points_rejected(dielectric_sphere):
    with pytest.raises(SurfaceAmbiguityError):
        green(dielectric_sphere, OMEGA, [RADIUS, 0.0, 0.0], [0.0, 0.0, 3.0])
    with pytest.raises(SurfaceAmbiguityError):
        farfield_amplitude(dielectric_sphere, OMEGA, [0, 0, 1], [0.0, RADIUS, 0.0])


def test_homogeneous_farfield_undefined():
    with pytest.raises(DomainError):
        farfield_amplitude(LOSSY, OMEGA, [0, 0, 1], [0.0, 0.0, 0.0])


@pytest.mark.parametrize("omega", [0.0, -1.0, math.inf])
def test_bad_frequency(omega):
    with pytest.raises(InvalidArgumentError):
        green(Vacuum(), omega, [1, 0, 0], [0, 0, 0])


def test_bad_geometry():
    with pytest.raises(InvalidArgumentError):
        SphereInVacuum(-1.0, VACUUM)
    with pytest.raises(InvalidArgumentError):
        green(object(), OMEGA, [1, 0, 0], [0, 0, 0])


# -- far field ----------------------------------------------------------------------


def test_vacuum_farfield_at_origin():
    u = np.array([0.6, 0.0, 0.8])
    W = farfield_amplitude(Vacuum(), OMEGA, u, np.zeros(3)).W
    assert np.abs(W - (np.eye(3) - np.outer(u, u)) / (4 * math.pi)).max() < 1e-16


@pytest.mark.parametrize("source", [(-1.1, 0.4, 2.5), (0.2, 0.1, -0.3)], ids=["outside", "inside"])
def test_farfield_transverse(magnetic_sphere, source):
    dirs = np.array([[0, 0, 1.0], [0.6, 0.8, 0], [-0.48, 0.36, -0.8]])
    W = farfield_amplitudes(magnetic_sphere, OMEGA, dirs, source)
    assert np.abs(np.einsum("pi,pij->pj", dirs, W)).max() < 1e-14 * np.abs(W).max()


@pytest.mark.parametrize("source", [(-1.1, 0.4, 2.5), (0.2, 0.1, -0.3)], ids=["outside", "inside"])
def test_farfield_limit_rate(dielectric_sphere, source):
    u = np.array([0.36, 0.48, 0.8])
    W = farfield_amplitude(dielectric_sphere, OMEGA, u, source).W
    errs = []
    for R in (1e2, 1e3, 1e4):
        G = green(dielectric_sphere, OMEGA, R * u, source).value
        errs.append(np.abs(R * np.exp(-1j * K0 * R) * G - W).max())
    slopes = -np.diff(np.log10(errs))
    assert np.all((slopes > 0.9) & (slopes < 1.1))
    assert errs[-1] < 1e-3 * np.abs(W).max()


# -- noise dyadics --------------------------------------------------------------------


def test_aux_dyadics_vanish_for_vacuum_sources(dielectric_sphere):
    r = np.array([0.1, 0.2, 0.3])
    for geo, s in ((Vacuum(), [1.0, 0, 0]), (dielectric_sphere, [0.0, 0.0, 2.0])):
        A_e, A_m = aux_dyadics(geo, OMEGA, r, s)
        assert not A_e.any() and not A_m.any()


def test_aux_dyadics_inside_lossy_sphere(magnetic_sphere):
    r, s = np.array([0.3, 2.6, 0.9]), np.array(INTERIOR_POINTS[0])
    A_e, A_m = aux_dyadics(magnetic_sphere, OMEGA, r, s)
    g = green(magnetic_sphere, OMEGA, r, s)
    _, e, m = medium_wavenumber(magnetic_sphere.material, OMEGA)
    assert np.allclose(A_e, K0 * math.sqrt(e.imag) * g.value, rtol=1e-14, atol=0)
    assert np.allclose(A_m, math.sqrt((-1 / m).imag) * g.curl_rprime, rtol=1e-14, atol=0)


def test_scaled_dyadics_prefactor(magnetic_sphere):
    r, s = np.array([0.3, 2.6, 0.9]), np.array(INTERIOR_POINTS[1])
    A_e, A_m = aux_dyadics(magnetic_sphere, OMEGA, r, s)
    G_e, G_m = scaled_dyadics(magnetic_sphere, OMEGA, r, s)
    f = math.sqrt(CONSTANTS.hbar * CONSTANTS.mu0 * OMEGA**2 / math.pi)
    assert np.allclose(G_e, 1j * f * A_e, rtol=1e-15, atol=0)
    assert np.allclose(G_m, -1j * f * A_m, rtol=1e-15, atol=0)
