"""Property-based invariants (hypothesis)."""
import numpy as np
from hypothesis import given, settings, strategies as st

import capdrop.lattice as lat
import capdrop.maxflow as mf
import capdrop.surface as sf


@st.composite
def cut_problems(draw):
    nx = draw(st.integers(2, 4))
    ny = draw(st.integers(2, 3))
    n = nx * ny
    idx = np.arange(n).reshape(nx, ny)
    pu = np.concatenate([idx[:-1, :].ravel(), idx[:, :-1].ravel()])
    pv = np.concatenate([idx[1:, :].ravel(), idx[:, 1:].ravel()])
    ints = st.integers(0, 32)
    pw = np.array(draw(st.lists(ints, min_size=len(pu),
                                max_size=len(pu)))) / 32.0
    cl = np.array(draw(st.lists(ints, min_size=n, max_size=n))) / 32.0
    cv = np.array(draw(st.lists(ints, min_size=n, max_size=n))) / 32.0
    return mf.CutProblem(num_nodes=n, pair_u=pu, pair_v=pv, pair_w=pw,
                         cost_L=cl, cost_V=cv)


@settings(max_examples=40, deadline=None)
@given(cut_problems(), st.lists(st.floats(0.0, 4.0), min_size=2,
                                max_size=5))
def test_volume_monotone_and_nested_in_lambda(prob, lams):
    prev_labels = None
    prev_vol = -1.0
    for lam in sorted(lams):
        sol = mf.solve(prob, mf.SINK_SIDE, lam=lam)
        vol = sol.volume(prob)
        assert vol >= prev_vol
        if prev_labels is not None:
            assert np.all(sol.labels[prev_labels])
        prev_labels, prev_vol = sol.labels, vol


@settings(max_examples=40, deadline=None)
@given(cut_problems())
def test_solutions_achieve_their_reported_value(prob):
    for side in (mf.SOURCE_SIDE, mf.SINK_SIDE):
        sol = mf.solve(prob, side)
        assert abs(prob.energy_of(sol.labels) - sol.flow_value) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(cut_problems())
def test_repeat_solves_are_bit_identical(prob):
    a = mf.solve(prob, mf.SINK_SIDE)
    b = mf.solve(prob, mf.SINK_SIDE)
    assert a.flow_value == b.flow_value
    assert np.array_equal(a.labels, b.labels)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(-0.9, 0.9))
def test_lattice_energy_additive_over_any_split(seed, cos):
    rng = np.random.default_rng(seed)
    coeffs = lat.coeffs_from_angle(cos)
    h = 1 / 8
    dom = lat.build_domain(sf.make_pillar_surface(0.5, 1.0, 8), coeffs,
                           [(0.0, 2.0), (-1.0 - 3 * h, 0.5)], h,
                           epsilon=1.0)
    labels = dom.new_field().labels.copy()
    labels[(rng.random(dom.shape) < 0.5) & ~dom.solid] = lat.LIQUID
    field = lat.LabelField(dom, labels)
    whole = lat.energy(field, coeffs)
    split = float(rng.integers(1, 16)) * h
    lo_z, hi_z = float(dom.lo[-1]) - 1.0, float(dom.hi[-1]) + 1.0
    left = lat.energy(field, coeffs, region=((0.0, lo_z), (split, hi_z)))
    right = lat.energy(field, coeffs, region=((split, lo_z), (2.0, hi_z)))
    assert abs(left.total_E + right.total_E - whole.total_E) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.95, 0.95))
def test_flat_cell_problem_is_exact_at_any_angle(cos):
    import capdrop.cellproblem as cp
    coeffs = lat.coeffs_from_angle(cos)
    if abs(coeffs.cos_theta_Y) >= 1:
        return
    res = cp.cell_result(sf.flat_surface(1), coeffs, r=2, eps_over_h=4)
    assert abs(res.cos_Theta_Y - cos) <= 1e-7
