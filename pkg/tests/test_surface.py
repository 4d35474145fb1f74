"""Surface construction and staircase summary oracles."""
import numpy as np
import pytest

import capdrop.surface as sf


def test_flat_summary():
    s = sf.summarize(sf.flat_surface(1))
    assert s.roughness_rho == pytest.approx(1.0)
    assert s.pillar_fraction_f == pytest.approx(1.0)


def test_pillar_summary_closed_form():
    # f = 1/2, depth M = 1: one period adds two walls of height 1,
    # so rho = 1 + 2 M = 3 for d = 1
    surf = sf.make_pillar_surface(0.5, 1.0, 8)
    s = sf.summarize(surf)
    assert s.pillar_fraction_f == pytest.approx(0.5)
    assert s.roughness_rho == pytest.approx(3.0)


def test_pillar_summary_other_depth():
    surf = sf.make_pillar_surface(0.5, 2.0, 8)
    s = sf.summarize(surf)
    assert s.roughness_rho == pytest.approx(1.0 + 2.0 * 2.0)


def test_pillar_3d_fraction_is_realized_on_the_grid():
    surf = sf.make_pillar_surface(0.5, 2.0, 4, d=2)
    s = sf.summarize(surf)
    # the top patch snaps to whole cells: fraction is k^2/16 for some k
    assert s.pillar_fraction_f * 16 == pytest.approx(
        round(s.pillar_fraction_f * 16))


def test_heights_are_periodic_by_index():
    surf = sf.make_pillar_surface(0.5, 1.0, 8)
    n = surf.cells_per_period
    i = np.arange(3 * n)
    phi = surf.height_at_index((i % n,))
    assert np.array_equal(phi[:n], phi[n:2 * n])


def test_save_load_roundtrip(tmp_path):
    surf = sf.make_pillar_surface(0.5, 1.5, 8)
    path = tmp_path / "surface.txt"
    sf.save_surface(surf, path)
    back = sf.load_surface(path)
    assert back.d == surf.d
    assert back.depth_M == surf.depth_M
    assert back.cells_per_period == surf.cells_per_period
    i = np.arange(surf.cells_per_period)
    assert np.allclose(back.height_at_index((i,)),
                       surf.height_at_index((i,)))


def test_invalid_fractions_rejected():
    with pytest.raises(ValueError):
        sf.make_pillar_surface(0.0, 1.0, 8)
    with pytest.raises(ValueError):
        sf.make_pillar_surface(1.5, 1.0, 8)
