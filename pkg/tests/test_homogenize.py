"""Homogenization helpers: scales, slopes, distances, CSV round trips."""
import math

import numpy as np
import pytest

import capdrop.cellproblem as cp
import capdrop.homogenize as hg
import capdrop.lattice as lat
import capdrop.surface as sf


def test_reference_scales_follow_their_formulas():
    for eps in (1 / 8, 1 / 16, 1 / 32):
        assert hg.h0_of(eps) == pytest.approx(
            eps ** ((1 + hg.H0_ALPHA) / 3))
        s = 0.27 ** (-1 / 2) * eps
        assert hg.r0_of(eps, 0.27, 1) == pytest.approx(
            hg.R0_PREFACTOR * eps
            * math.exp(hg.R0_LOG_COEFF * math.sqrt(abs(math.log(s)))))


def test_r0_shrinks_with_epsilon():
    vals = [hg.r0_of(e, 0.27, 1) for e in (1 / 8, 1 / 16, 1 / 32, 1 / 64)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_loglog_slope_recovers_power_law():
    eps = [1 / 8, 1 / 16, 1 / 32]
    gaps = [3.0 * e ** 1.25 for e in eps]
    slope, err = hg._loglog_slope(eps, gaps)
    assert slope == pytest.approx(1.25, abs=1e-9)
    assert err == pytest.approx(0.0, abs=1e-6)
    slope_nan, _ = hg._loglog_slope(eps, [1.0, 0.0, 1.0])
    assert math.isnan(slope_nan)


def _flat_dom(h=1 / 16):
    return lat.build_domain(sf.flat_surface(1), lat.coeffs_from_angle(0.3),
                            [(0.0, 1.0), (-h, 0.5)], h, epsilon=h)


def test_hausdorff_above_measures_a_known_shift():
    dom = _flat_dom()
    xc = dom.centers(0)
    zc = dom.centers(1)
    box = lambda x0, x1: ((xc > x0) & (xc < x1))[:, None] \
        & (zc > 0)[None, :] & ~dom.solid
    a = box(0.25, 0.5)
    b = box(0.375, 0.625)
    d = hg.hausdorff_above(a, b, dom, z_min=0.0)
    assert d == pytest.approx(0.125, abs=dom.h)


def test_hausdorff_above_empty_cases():
    dom = _flat_dom()
    empty = np.zeros(dom.shape, dtype=bool)
    full = ~dom.solid
    assert hg.hausdorff_above(empty, empty, dom, 0.0) == 0.0
    assert math.isinf(hg.hausdorff_above(empty, full, dom, 0.0))


def test_strip_to_count_removes_highest_cells_first():
    labels = np.zeros((4, 6), dtype=bool)
    labels[:, :4] = True
    out = hg._strip_to_count(labels, 10)
    assert out.sum() == 10
    # cells removed from the top rows, base untouched
    assert out[:, :2].all()
    assert not out[:, 4:].any()


def test_rate_report_validates_alignment():
    eff = cp.EffectiveAngles(cos_theta_bar=0.5, cos_theta_W=0.6,
                             cos_theta_CB=0.7, regime=cp.WENZEL,
                             extrapolation_residual=0.0)
    with pytest.raises(ValueError):
        hg.RateReport(epsilons=[0.125, 0.0625], h_used=[0.01],
                      h0_used=[0.1, 0.2], energy_gap=[0.1, 0.05],
                      energy_gap_analytic=[0.1, 0.05],
                      l1_gap=[0.1, 0.05], hausdorff_gap=[0.1, 0.05],
                      energy_slope=1.0, energy_slope_err=0.0,
                      l1_slope=1.0, hausdorff_slope=1.0,
                      construction_energy=[1.0, 1.0],
                      droplet_energy=[1.0, 1.0],
                      construction_ok=[True, True], effective=eff)


def _tiny_report():
    eff = cp.EffectiveAngles(cos_theta_bar=0.5, cos_theta_W=0.6,
                             cos_theta_CB=0.7, regime=cp.WENZEL,
                             extrapolation_residual=0.0)
    return hg.RateReport(epsilons=[0.125, 0.0625],
                         h_used=[0.125 / 8, 0.0625 / 8],
                         h0_used=[0.35, 0.25],
                         energy_gap=[0.1, 0.05],
                         energy_gap_analytic=[0.12, 0.07],
                         l1_gap=[0.1, 0.04], hausdorff_gap=[0.02, 0.01],
                         energy_slope=1.0, energy_slope_err=0.0,
                         l1_slope=1.3, hausdorff_slope=1.0,
                         construction_energy=[2.0, 2.0],
                         droplet_energy=[1.9, 1.95],
                         construction_ok=[True, True], effective=eff)


def test_rate_csv_round_trip(tmp_path):
    rep = _tiny_report()
    path = tmp_path / "rate.csv"
    hg.write_rate_csv(path, rep)
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:] if not ln.startswith("#")]
    assert len(rows) == 2
    i_eps = header.index("eps")
    i_gap = header.index("energy_gap")
    assert [float(r[i_eps]) for r in rows] == rep.epsilons
    assert [float(r[i_gap]) for r in rows] == rep.energy_gap
    assert any(ln.startswith("#") for ln in lines)


def test_profile_csv_round_trip(tmp_path):
    prof = hg.PerimeterProfile(heights=[0.1, 0.2, 0.4],
                               per_slab=[0.5, 0.6, 0.55],
                               r0_epsilon=0.15, linear_coefficient=3.0,
                               violations=[0.1])
    path = tmp_path / "profile.csv"
    hg.write_profile_csv(path, prof)
    lines = path.read_text().splitlines()
    rows = [ln.split(",") for ln in lines[1:] if not ln.startswith("#")]
    assert [float(r[0]) for r in rows] == prof.heights
    assert [int(r[2]) for r in rows] == [0, 1, 1]   # above-r0 flags
