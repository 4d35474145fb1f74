"""Droplet geometry oracles and small end-to-end solves."""
import math

import numpy as np
import pytest
from scipy import integrate

import capdrop.droplet as dr
import capdrop.lattice as lat
import capdrop.surface as sf


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("rho0,cos", [(0.5, 0.3), (0.8, -0.4), (1.2, 0.0)])
def test_cap_volume_matches_quadrature(d, rho0, cos):
    z0 = rho0 * cos
    if d == 1:
        integrand = lambda z: 2 * math.sqrt(rho0 ** 2 - (z - z0) ** 2)
    else:
        integrand = lambda z: math.pi * (rho0 ** 2 - (z - z0) ** 2)
    ref, _ = integrate.quad(integrand, max(0.0, z0 - rho0), z0 + rho0)
    assert dr.cap_volume(rho0, z0, d) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("rho0,cos", [(0.5, 0.3), (0.8, -0.4), (1.2, 0.0)])
def test_cap_lv_area_matches_quadrature(d, rho0, cos):
    z0 = rho0 * cos
    z_lo = max(0.0, z0 - rho0)
    if d == 1:
        # arc length of the circle above z = 0
        integrand = lambda z: 2 * rho0 / math.sqrt(
            rho0 ** 2 - (z - z0) ** 2)
    else:
        integrand = lambda z: 2 * math.pi * rho0
    ref, _ = integrate.quad(integrand, z_lo, z0 + rho0)
    assert dr.cap_lv_area(rho0, z0, d) == pytest.approx(ref, rel=1e-7)


@pytest.mark.parametrize("d", [1, 2])
def test_homogenized_cap_hits_the_target_volume(d):
    for cos in (-0.5, 0.0, 0.5):
        cap = dr.homogenized_cap(cos, 0.3, d)
        assert cap.z0 == pytest.approx(cap.rho0 * cos, abs=1e-12)
        assert dr.cap_volume(cap.rho0, cap.z0, d) == pytest.approx(
            0.3, rel=1e-9)


def test_rasterized_cap_cell_count_tracks_the_volume():
    cap = dr.homogenized_cap(0.5, 0.2, 1, center_x=(0.5,))
    h = 1 / 64
    dom = lat.build_domain(sf.flat_surface(1), lat.coeffs_from_angle(0.5),
                           [(0.0, 1.0), (-h, 0.5)], h, epsilon=h)
    field = dr.rasterize_cap(cap, dom)
    vol = field.volume()
    # off by at most a perimeter's worth of cells
    assert abs(vol - 0.2) < dr.cap_lv_area(cap.rho0, cap.z0, 1) * 2 * h


def test_fit_circle_recovers_synthetic_circle():
    rng = np.random.default_rng(5)
    theta = rng.uniform(0.2, math.pi - 0.2, size=80)
    center = np.array([0.4, 0.15])
    radius = 0.33
    pts = center + radius * np.stack(
        [np.cos(theta), np.sin(theta)], axis=1)
    c_fit, r_fit = dr.fit_circle(pts)
    assert np.allclose(c_fit, center, atol=1e-9)
    assert r_fit == pytest.approx(radius, abs=1e-9)


def test_minimize_droplet_flat_small():
    cos = 0.5
    h = 1 / 32
    coeffs = lat.coeffs_from_angle(cos)
    dom = lat.build_domain(sf.flat_surface(1), coeffs,
                           [(0.0, 1.0), (-h, 0.5)], h, epsilon=h)
    res = dr.minimize_droplet(dom, coeffs, 0.15)
    assert abs(res.volume_real - 0.15) <= 0.5 * dom.cell_volume + 1e-12
    # relative energy close to the analytic spherical-cap value
    cap = dr.homogenized_cap(cos, 0.15, 1)
    e_ref = (dr.cap_lv_area(cap.rho0, cap.z0, 1)
             + cos * 2.0 * cap.base_half_width)
    assert res.energy.total_E_prime == pytest.approx(e_ref, rel=0.1)
    lo, hi = res.lambda_bracket
    assert lo <= hi


def test_minimize_droplet_rejects_oversized_volume():
    h = 1 / 16
    coeffs = lat.coeffs_from_angle(0.5)
    dom = lat.build_domain(sf.flat_surface(1), coeffs,
                           [(0.0, 1.0), (-h, 0.5)], h, epsilon=h)
    with pytest.raises(ValueError):
        dr.minimize_droplet(dom, coeffs, 10.0)


def test_interface_points_lie_between_phases():
    h = 1 / 16
    coeffs = lat.coeffs_from_angle(0.5)
    dom = lat.build_domain(sf.flat_surface(1), coeffs,
                           [(0.0, 1.0), (-h, 0.5)], h, epsilon=h)
    field = lat.liquid_above(dom, 0.25)
    pts = dr.interface_points(field)
    assert len(pts) > 0
    assert np.allclose(pts[:, -1], 0.25, atol=h)
