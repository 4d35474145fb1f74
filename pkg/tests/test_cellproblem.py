"""Cell-problem oracles: closed forms, fits, periodic minimizers."""
import numpy as np
import pytest

import capdrop.cellproblem as cp
import capdrop.lattice as lat
import capdrop.surface as sf


def test_closed_forms_match_hand_formulas():
    surf = sf.make_pillar_surface(0.5, 1.0, 8)
    s = sf.summarize(surf)
    for cos in (0.3, -0.3):
        w, cb = cp.closed_forms(surf, cos)
        assert w == pytest.approx(cos * s.roughness_rho)
        sign = 1.0 if cos >= 0 else -1.0
        assert cb == pytest.approx(cos * s.pillar_fraction_f
                                   + sign * (1 - s.pillar_fraction_f))


def test_wenzel_threshold_values():
    assert cp.wenzel_threshold(sf.flat_surface(1)) == 1.0
    assert cp.wenzel_threshold(
        sf.make_pillar_surface(0.5, 1.0, 8)) == pytest.approx(0.25)
    assert cp.wenzel_threshold(
        sf.make_pillar_surface(0.5, 1.0, 4, d=2)) == pytest.approx(1 / 6)


def test_flat_surface_recovers_the_material_angle():
    coeffs = lat.coeffs_from_angle(0.6)
    res = cp.cell_result(sf.flat_surface(1), coeffs, r=2, eps_over_h=8)
    assert res.cos_Theta_Y == pytest.approx(0.6, abs=1e-7)
    # trivial minimizers: SL fully wet, SV fully dry above the substrate
    assert np.array_equal(res.minimizer_SL.labels,
                          lat.fill_all(res.minimizer_SL.domain).labels)


def test_fit_inverse_r_recovers_exact_law():
    rs = [2, 4, 8, 16]
    a_true, b_true = 0.37, -0.12
    ys = [a_true + b_true / r for r in rs]
    a, b, resid = cp.fit_inverse_r(rs, ys)
    assert a == pytest.approx(a_true, abs=1e-12)
    assert b == pytest.approx(b_true, abs=1e-12)
    assert resid == pytest.approx(0.0, abs=1e-12)


def test_periodic_minimizer_matches_cassie_baxter_closed_form():
    surf = sf.make_pillar_surface(0.5, 2.0, 8)
    coeffs = lat.coeffs_from_angle(0.95)
    _, e_sl = cp.periodic_minimizer(surf, coeffs, cp.SL)
    _, e_sv = cp.periodic_minimizer(surf, coeffs, cp.SV)
    _, cb = cp.closed_forms(surf, 0.95)
    assert (e_sl - e_sv) / coeffs.sigma_LV == pytest.approx(cb, abs=1e-7)


def test_periodic_minimizer_matches_wenzel_closed_form():
    surf = sf.make_pillar_surface(0.5, 1.0, 8)
    coeffs = lat.coeffs_from_angle(0.1)
    _, e_sl = cp.periodic_minimizer(surf, coeffs, cp.SL)
    _, e_sv = cp.periodic_minimizer(surf, coeffs, cp.SV)
    w, _ = cp.closed_forms(surf, 0.1)
    assert (e_sl - e_sv) / coeffs.sigma_LV == pytest.approx(w, abs=1e-7)


def test_cell_problem_rejects_degenerate_angles():
    coeffs = lat.Coefficients(sigma_LV=1.0, sigma_SL=2.5, sigma_SV=1.0)
    assert abs(coeffs.cos_theta_Y) >= 1
    with pytest.raises(ValueError):
        cp.solve_cell(sf.flat_surface(1), coeffs, 2, 8, cp.SL)


def test_effective_angles_requires_three_windows():
    with pytest.raises(ValueError):
        cp.effective_angles(sf.flat_surface(1),
                            lat.coeffs_from_angle(0.2), [2, 4])


def test_sigma_values_are_per_unit_window_area():
    surf = sf.flat_surface(1)
    coeffs = lat.coeffs_from_angle(0.2)
    s2, _ = cp.sigma_SL(surf, coeffs, 2, 8)
    s4, _ = cp.sigma_SL(surf, coeffs, 4, 8)
    assert s2 == pytest.approx(s4, abs=1e-9)
    assert s2 == pytest.approx(coeffs.sigma_SL, abs=1e-7)
