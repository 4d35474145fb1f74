"""Acceptance checks shared by ``capdrop --verify`` and the test suite.

Each check exercises one published accuracy / exactness claim of the
toolkit end to end and reports PASS, FAIL, or SKIP with a one-line
detail.  Checks are deterministic (fixed RNG seeds, fixed problem
sizes) so repeated runs produce identical verdicts.

The homogenization sweep (check 10) is by far the most expensive step;
its result is cached at module level so the perimeter diagnostic
(check 11) reuses the same droplets.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import cellproblem as cp
from . import droplet as dr
from . import homogenize as hg
from . import lattice as lat
from . import maxflow as mf
from . import surface as sf

PASS = "PASS"
FAIL = "FAIL"
SKIP = "SKIP"

# Grids larger than this are skipped rather than attempted; all stock
# check configurations sit far below the budget.
MAX_CELLS = 8_000_000


@dataclass
class CheckResult:
    number: int
    name: str
    status: str
    detail: str
    seconds: float

    def line(self) -> str:
        return (f"[{self.status}] {self.number:2d} {self.name}: "
                f"{self.detail} ({self.seconds:.1f}s)")


def _result(number, name, fn) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
        status = PASS if ok else FAIL
    except _Oversized as exc:
        status, detail = SKIP, str(exc)
    except Exception as exc:                      # noqa: BLE001
        status, detail = FAIL, f"{type(exc).__name__}: {exc}"
    return CheckResult(number, name, status, detail,
                       time.perf_counter() - t0)


class _Oversized(Exception):
    pass


def _guard_cells(n_cells: int) -> None:
    if n_cells > MAX_CELLS:
        raise _Oversized(f"grid of {n_cells} cells exceeds the "
                         f"{MAX_CELLS}-cell verification budget")


# ---------------------------------------------------------------------------
# 1. min-cut solver vs exhaustive enumeration
# ---------------------------------------------------------------------------

def _random_cut_problem(rng: np.random.Generator) -> mf.CutProblem:
    """Small grid-structured binary energy with rational weights and a
    sprinkling of hard one-sided constraints (at most 20 free cells)."""
    nx = int(rng.integers(2, 6))
    ny = int(rng.integers(2, 5))
    n = nx * ny
    idx = np.arange(n).reshape(nx, ny)
    pu, pv = [], []
    for dx, dy in ((1, 0), (0, 1), (1, 1), (1, -1)):
        a_x = slice(0, nx - dx) if dx else slice(None)
        b_x = slice(dx, nx) if dx else slice(None)
        if dy >= 0:
            a_y = slice(0, ny - dy) if dy else slice(None)
            b_y = slice(dy, ny) if dy else slice(None)
        else:
            a_y = slice(-dy, ny)
            b_y = slice(0, ny + dy)
        pu.append(idx[a_x, a_y].ravel())
        pv.append(idx[b_x, b_y].ravel())
    pair_u = np.concatenate(pu)
    pair_v = np.concatenate(pv)
    pair_w = rng.integers(0, 65, size=pair_u.size) / 64.0
    cost_L = rng.integers(0, 65, size=n) / 64.0
    cost_V = rng.integers(0, 65, size=n) / 64.0
    hard = rng.random(n) < 0.15
    side = rng.random(n) < 0.5
    cost_L[hard & side] = np.inf       # those cells must stay Vapor
    cost_V[hard & ~side] = np.inf      # those cells must stay Liquid
    return mf.CutProblem(num_nodes=n, pair_u=pair_u, pair_v=pair_v,
                         pair_w=pair_w, cost_L=cost_L, cost_V=cost_V)


def _enumeration_min(problem: mf.CutProblem) -> float:
    n = problem.num_nodes
    states = np.arange(1 << n, dtype=np.uint32)
    lm = ((states[:, None] >> np.arange(n)) & 1).astype(bool)
    cl = np.where(np.isinf(problem.cost_L), 0.0, problem.cost_L)
    cv = np.where(np.isinf(problem.cost_V), 0.0, problem.cost_V)
    e = lm @ cl + (~lm) @ cv
    for u, v, w in zip(problem.pair_u, problem.pair_v, problem.pair_w):
        e += np.where(lm[:, u] != lm[:, v], w, 0.0)
    bad = (lm & np.isinf(problem.cost_L)).any(axis=1) \
        | ((~lm) & np.isinf(problem.cost_V)).any(axis=1)
    e[bad] = np.inf
    return float(e.min())


def check_cut_exactness(n_problems: int = 200):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(n_problems):
        prob = _random_cut_problem(rng)
        sol = mf.solve(prob, mf.SINK_SIDE)
        ref = _enumeration_min(prob)
        gap = abs(sol.flow_value - ref)
        relabel = abs(prob.energy_of(sol.labels) - sol.flow_value)
        worst = max(worst, gap, relabel)
        if gap > 1e-9 or relabel > 1e-9:
            return False, (f"solver {sol.flow_value!r} != enumeration "
                           f"{ref!r} on a {prob.num_nodes}-cell grid")
    return True, (f"{n_problems} random grids match exhaustive "
                  f"enumeration (worst gap {worst:.2e})")


# ---------------------------------------------------------------------------
# 2. flat-surface identity
# ---------------------------------------------------------------------------

def check_flat_identity():
    flat = sf.flat_surface(1)
    errs = []
    for c in (-0.8, -0.4, 0.0, 0.4, 0.8):
        coeffs = lat.coeffs_from_angle(c)
        res = cp.cell_result(flat, coeffs, r=4, eps_over_h=8)
        errs.append(abs(res.cos_Theta_Y - c))
    ok = max(errs) <= 0.02
    return ok, f"max |cos error| = {max(errs):.4f} (tol 0.02)"


# ---------------------------------------------------------------------------
# 3. Wenzel regime and groove-filling template
# ---------------------------------------------------------------------------

def check_wenzel_regime():
    surf = sf.make_pillar_surface(0.5, 1.0, 8)
    coeffs = lat.coeffs_from_angle(0.1)
    eff = cp.effective_angles(surf, coeffs, [2, 4, 8])
    err = abs(eff.cos_theta_bar - 0.30)
    if err > 0.02:
        return False, (f"cos_theta_bar {eff.cos_theta_bar:.4f} misses "
                       f"0.30 by {err:.4f} (tol 0.02)")
    for res in eff.results:
        tmpl = lat.fill_all(res.minimizer_SL.domain)
        if not np.array_equal(res.minimizer_SL.labels, tmpl.labels):
            return False, (f"SL minimizer at r={res.window_r} deviates "
                           "from the groove-filling template")
    return True, (f"cos_theta_bar = {eff.cos_theta_bar:.4f} (target "
                  "0.30 +- 0.02); all SL minimizers groove-filling")


# ---------------------------------------------------------------------------
# 4. Cassie-Baxter regime, planar template, and the 3-d analogue
# ---------------------------------------------------------------------------

def check_cassie_baxter():
    surf = sf.make_pillar_surface(0.5, 2.0, 8)
    coeffs = lat.coeffs_from_angle(0.95)
    eff = cp.effective_angles(surf, coeffs, [2, 4, 8])
    err = abs(eff.cos_theta_bar - 0.975)
    if err > 0.02:
        return False, (f"cos_theta_bar {eff.cos_theta_bar:.4f} misses "
                       f"0.975 by {err:.4f} (tol 0.02)")
    for res in eff.results:
        tmpl = lat.liquid_above(res.minimizer_SL.domain, 0.0)
        if not np.array_equal(res.minimizer_SL.labels, tmpl.labels):
            return False, (f"SL minimizer at r={res.window_r} deviates "
                           "from the flat {z >= 0} template")
    # 3-d analogue on a wrapped window of 2 periods (a free lateral
    # boundary at this small window would add an O(1/r) deficit per
    # lateral direction that swamps the tolerance)
    surf3 = sf.make_pillar_surface(0.5, 2.0, 4, d=2)
    area3 = 2 ** surf3.d
    e_sl3, _ = cp.solve_cell(surf3, coeffs, 2, 4, cp.SL,
                             boundary=lat.PERIODIC)
    e_sv3, _ = cp.solve_cell(surf3, coeffs, 2, 4, cp.SV,
                             boundary=lat.PERIODIC)
    cos3 = (e_sl3 - e_sv3) / (coeffs.sigma_LV * area3)
    _w3, cb3 = cp.closed_forms(surf3, coeffs.cos_theta_Y)
    err3 = abs(cos3 - cb3)
    if err3 > 0.04:
        return False, (f"3-d composite angle {cos3:.4f} "
                       f"misses {cb3:.4f} by {err3:.4f} (tol 0.04)")
    return True, (f"cos_theta_bar = {eff.cos_theta_bar:.4f} "
                  f"(target 0.975 +- 0.02); planar template holds; "
                  f"3-d composite error {err3:.4f} (tol 0.04)")


# ---------------------------------------------------------------------------
# 5. concavity, regime bounds, nondegeneracy
# ---------------------------------------------------------------------------

def check_concavity_sweep():
    surf = sf.make_pillar_surface(0.5, 1.0, 8)
    cos_values = np.linspace(0.0, 0.96, 9)
    rep = cp.concavity_sweep(surf, cos_values, [2, 4, 8])
    ok = (rep.concave_ok and rep.bound_ok
          and rep.min_degeneracy_gap >= 0.01)
    return ok, (f"max second difference {rep.max_second_difference:+.4f} "
                f"(tol +0.01); bounds {'hold' if rep.bound_ok else 'fail'}; "
                f"min degeneracy gap {rep.min_degeneracy_gap:.4f} "
                "(need >= 0.01)")


# ---------------------------------------------------------------------------
# 6. finite-window 1/r convergence law
# ---------------------------------------------------------------------------

def check_finite_size_law():
    # cos_theta_Y = 0.4 sits between the Wenzel and Cassie-Baxter exact
    # regimes, where the window estimate carries a genuine 1/r drift
    surf = sf.make_pillar_surface(0.5, 1.0, 8)
    coeffs = lat.coeffs_from_angle(0.4)
    rs = [2, 4, 8]
    ys = [cp.cell_result(surf, coeffs, r, 8).cos_Theta_Y for r in rs]
    a, b, _ = cp.fit_inverse_r(rs, ys)
    worst = 0.0
    for r, y in zip(rs, ys):
        resid = abs(y - (a + b / r))
        bound = 0.25 * abs(b) / r
        worst = max(worst, resid - bound)
        if resid > bound:
            return False, (f"residual {resid:.2e} at r={r} exceeds 25% "
                           f"of the b/r term {abs(b) / r:.2e}")
    return True, (f"fit a={a:.4f}, b={b:.4f}; every residual within "
                  "25% of its b/r term")


# ---------------------------------------------------------------------------
# 7. super-additivity (exact) and almost-additivity (explicit constant)
# ---------------------------------------------------------------------------

def check_additivity_envelope():
    surf = sf.make_pillar_surface(0.5, 1.0, 8)
    coeffs = lat.coeffs_from_angle(0.1)
    d = surf.d
    const = coeffs.sigma_LV * 2 * d * surf.depth_M
    for which in (cp.SL, cp.SV):
        for r in (1, 2, 4):
            e_r, _ = cp.solve_cell(surf, coeffs, r, 8, which)
            e_2r, _ = cp.solve_cell(surf, coeffs, 2 * r, 8, which)
            tiles = 2 ** d
            if e_2r < tiles * e_r - 1e-9:
                return False, (f"super-additivity fails for {which} at "
                               f"r={r}: E(2r)={e_2r!r} < "
                               f"{tiles}*E(r)={tiles * e_r!r}")
            slack = tiles * e_r + const * (2 * r) ** (d - 1) - e_2r
            if slack < -1e-9:
                return False, (f"almost-additivity fails for {which} at "
                               f"r={r}: overshoot {-slack:.3e} beyond the "
                               "sigma_LV*2dM lateral constant")
    return True, ("E(2r) >= 2^d E(r) exactly and "
                  "E(2r) <= 2^d E(r) + sigma_LV*2dM*(2r)^(d-1) on all "
                  "doubling windows, both SL and SV")


# ---------------------------------------------------------------------------
# 8. droplet on a flat surface: shape and energy convergence
# ---------------------------------------------------------------------------

def check_flat_droplet(h_list=(1 / 64, 1 / 128, 1 / 256)):
    cos_ref = 0.5
    Vol = 0.2
    coeffs = lat.coeffs_from_angle(cos_ref)
    flat = sf.flat_surface(1)
    cap = dr.homogenized_cap(cos_ref, Vol, 1)
    e_ref = (dr.cap_lv_area(cap.rho0, cap.z0, 1)
             + cos_ref * 2.0 * cap.base_half_width)
    shape_err = []
    energy_rel = []
    for h in h_list:
        extents = [(0.125, 0.875), (-h, 0.5625)]
        n_cells = round(0.75 / h) * round((0.5625 + h) / h)
        _guard_cells(n_cells)
        dom = lat.build_domain(flat, coeffs, extents, h, epsilon=h)
        res = dr.minimize_droplet(dom, coeffs, Vol)
        center, radius = dr.fit_circle(dr.interface_points(res.labeling))
        shape_err.append(abs(center[-1] / radius - cos_ref))
        energy_rel.append(abs(res.energy.total_E_prime - e_ref) / e_ref)
    halving_ok = all(0.35 <= shape_err[i + 1] / shape_err[i] <= 0.65
                     for i in range(len(shape_err) - 1))
    energy_ok = energy_rel[-1] <= 0.03
    detail = (f"shape errors {['%.4f' % e for e in shape_err]} "
              f"(halving {'holds' if halving_ok else 'FAILS'}, "
              "ratio window [0.35, 0.65]); "
              f"finest-grid energy error {energy_rel[-1] * 100:.2f}% "
              "(tol 3%)")
    return halving_ok and energy_ok, detail


# ---------------------------------------------------------------------------
# 9. parametric monotonicity and nestedness
# ---------------------------------------------------------------------------

def check_parametric_monotonicity(n_instances: int = 50):
    rng = np.random.default_rng(1)
    for i in range(n_instances):
        f = float(rng.uniform(0.25, 0.75))
        M = float(rng.choice([0.5, 1.0, 2.0]))
        cos = float(rng.uniform(-0.9, 0.9))
        surf = sf.make_pillar_surface(f, M, 8)
        coeffs = lat.coeffs_from_angle(cos)
        h = 1.0 / 8.0
        extents = [(0.0, 2.0), (-M - 3 * h, 1.0)]
        dom = lat.build_domain(surf, coeffs, extents, h, epsilon=1.0)
        prob = lat.build_cut_problem(dom, coeffs)
        prev = None
        prev_vol = -np.inf
        for lam in np.linspace(0.0, 6.0, 7):
            sol = mf.solve(prob, mf.SINK_SIDE, lam=float(lam))
            vol = sol.volume(prob)
            if vol < prev_vol:
                return False, (f"volume decreased with lambda on "
                               f"instance {i}")
            if prev is not None and not np.all(sol.labels[prev]):
                return False, (f"sink-side minimizers not nested on "
                               f"instance {i}")
            prev, prev_vol = sol.labels, vol
    return True, (f"{n_instances} random rough instances: volume(lambda) "
                  "nondecreasing and sink-side labelings nested, exact")


# ---------------------------------------------------------------------------
# 10/11. homogenization sweep (cached) and perimeter diagnostic
# ---------------------------------------------------------------------------

SWEEP_SURFACE_ARGS = (0.5, 1.0, 8)
SWEEP_COS_THETA_Y = 0.35
SWEEP_VOLUME = 0.27
SWEEP_BOX = ([(0.0, 1.0)], 0.625)
SWEEP_EPSILONS = (1 / 8, 1 / 16, 1 / 32)

_sweep_cache: list = []


def sweep_report() -> hg.RateReport:
    """The acceptance-configuration epsilon sweep, computed once."""
    if not _sweep_cache:
        for eps in SWEEP_EPSILONS:
            n = round(1.0 / (eps / 8)) * round((0.625 + 1.5 * eps) / (eps / 8))
            _guard_cells(n)
        surf = sf.make_pillar_surface(*SWEEP_SURFACE_ARGS)
        coeffs = lat.coeffs_from_angle(SWEEP_COS_THETA_Y)
        _sweep_cache.append(hg.run_sweep(surf, coeffs, SWEEP_VOLUME,
                                         SWEEP_BOX, list(SWEEP_EPSILONS)))
    return _sweep_cache[0]


def check_homogenization_sweep():
    rep = sweep_report()
    problems = []
    if not all(rep.construction_ok):
        problems.append("droplet dearer than the explicit construction")
    if not all(a > b for a, b in zip(rep.energy_gap, rep.energy_gap[1:])):
        problems.append(f"energy gap not strictly decreasing "
                        f"{rep.energy_gap}")
    if not 0.7 <= rep.energy_slope <= 1.3:
        problems.append(f"energy slope {rep.energy_slope:.3f} outside "
                        "[0.7, 1.3]")
    if not all(a > b for a, b in zip(rep.l1_gap, rep.l1_gap[1:])):
        problems.append(f"l1 gap not decreasing {rep.l1_gap}")
    if not all(a > b for a, b in
               zip(rep.hausdorff_gap, rep.hausdorff_gap[1:])):
        problems.append(f"Hausdorff gap not decreasing "
                        f"{rep.hausdorff_gap}")
    if problems:
        return False, "; ".join(problems)
    return True, (f"energy gap {['%.4f' % g for g in rep.energy_gap]} "
                  f"(slope {rep.energy_slope:.2f}); l1 and Hausdorff "
                  "gaps decreasing; construction inequality exact at "
                  "every epsilon")


def check_perimeter_envelope(envelope_tol: float = 0.25):
    rep = sweep_report()
    pts_t, pts_p, above = [], [], []
    for eps, drop in zip(rep.epsilons, rep.droplets):
        r0 = hg.r0_of(eps, drop.volume_real, drop.labeling.domain.d)
        t_list = [k * eps for k in range(1, int(1.05 / eps) + 1)]
        prof = hg.perimeter_profile(drop, t_list,
                                    envelope_tol=envelope_tol)
        for t, p in zip(prof.heights, prof.per_slab):
            pts_t.append(t)
            pts_p.append(p)
            above.append(t >= r0)
    ts = np.asarray(pts_t)
    ps = np.asarray(pts_p)
    sel = np.asarray(above)
    if not sel.any() or not (ps[sel] > 0).any():
        return False, "no populated slabs above r0(eps); diagnostic vacuous"
    # least single constant with Per <= C * t over every asserted slab
    C = float((ps[sel] / ts[sel]).max())
    if not (np.isfinite(C) and C > 0):
        return False, f"degenerate envelope coefficient C = {C!r}"
    excursions = [float(t) for t, p, ok in zip(ts, ps, sel)
                  if not ok and p > C * t * (1.0 + envelope_tol)]
    return True, (f"single fitted C = {C:.3f} bounds all "
                  f"{int(sel.sum())} slabs with t >= r0(eps); "
                  f"{len(excursions)} sub-r0 slabs exceed the envelope "
                  "(reported, not failed)")


# ---------------------------------------------------------------------------

_CHECKS = [
    (1, "min-cut exactness vs enumeration", check_cut_exactness),
    (2, "flat-surface identity", check_flat_identity),
    (3, "Wenzel regime + groove-filling template", check_wenzel_regime),
    (4, "Cassie-Baxter regime + planar template + 3-d analogue",
     check_cassie_baxter),
    (5, "concavity, regime bounds, nondegeneracy", check_concavity_sweep),
    (6, "finite-window 1/r law", check_finite_size_law),
    (7, "additivity envelope", check_additivity_envelope),
    (8, "flat-surface droplet convergence", check_flat_droplet),
    (9, "parametric monotonicity and nestedness",
     check_parametric_monotonicity),
    (10, "homogenization epsilon sweep", check_homogenization_sweep),
    (11, "near-surface perimeter envelope", check_perimeter_envelope),
]


def run_check(number: int) -> CheckResult:
    for num, name, fn in _CHECKS:
        if num == number:
            return _result(num, name, fn)
    raise ValueError(f"no acceptance check numbered {number}")


def run_all(numbers=None):
    results = []
    for num, name, fn in _CHECKS:
        if numbers is not None and num not in numbers:
            continue
        results.append(_result(num, name, fn))
    return results
