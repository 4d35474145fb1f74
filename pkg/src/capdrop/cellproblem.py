"""Cell problems for effective contact angles.

``Sigma_SL(U)`` is the minimal interfacial energy over a window ``U`` of r
periods (open lateral boundary, no cost there) among labelings forced
Liquid above the plane {z = t}; ``Sigma_SV(U)`` is the mirror problem
forced Vapor above.  The effective angle of the window is

    cos_Theta_Y(U) = (Sigma_SL - Sigma_SV) / (sigma_LV |U|),

clamped to [-1, 1].  Window values converge as a + b/r (no log correction
for square windows); the extrapolated ``a`` is the homogenized angle
cos_theta_bar, compared against the two closed-form references

    Wenzel        cos_theta_W  = cos_theta_Y * rho
    Cassie-Baxter cos_theta_CB = cos_theta_Y * f +/- (1 - f)

(staircase roughness rho and realized pillar fraction f; the +/- sign
follows the sign of cos_theta_Y).

Everything is scale invariant, so cell problems run at the micro scale:
period 1, lattice spacing 1/eps_over_h.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import lattice as lat
from . import maxflow as mf
from .surface import SurfaceSpec, summarize

SL = "SL"
SV = "SV"

WENZEL = "Wenzel"
CASSIE_BAXTER = "CassieBaxter"
INTERMEDIATE = "Intermediate"

#: pad above the constraint plane / below the groove floor so every stencil
#: direction finds its partners on the template interfaces
_Z_PAD_CELLS = 3


@dataclass
class CellResult:
    window_r: int
    Sigma_SL: float
    Sigma_SV: float
    cos_Theta_Y: float
    minimizer_SL: object
    minimizer_SV: object


@dataclass
class EffectiveAngles:
    cos_theta_bar: float
    cos_theta_W: float
    cos_theta_CB: float
    regime: str
    extrapolation_residual: float
    sigma_SL_bar: float = float("nan")
    sigma_SV_bar: float = float("nan")
    wenzel_threshold: float = float("nan")
    results: Optional[list] = None


def cell_domain(surface: SurfaceSpec, coeffs, r: int, eps_over_h: int,
                boundary: str = lat.FREE) -> lat.Domain:
    """Window of r periods at micro scale (epsilon = 1, h = 1/eps_over_h)."""
    if r < 1:
        raise ValueError("window must span at least one period")
    h = 1.0 / eps_over_h
    pad = _Z_PAD_CELLS * h
    extents = [(0.0, float(r))] * surface.d
    extents.append((-surface.depth_M - pad, pad))
    return lat.build_domain(surface, coeffs, extents, h, epsilon=1.0,
                            boundary_policy=boundary)


def _constraint_above(domain: lat.Domain, force: np.int8, t: float
                      ) -> np.ndarray:
    cons = np.full(domain.shape, lat.FORCE_NONE, dtype=np.int8)
    zc = domain.centers(domain.dim - 1)
    above = np.broadcast_to(zc > t, domain.shape)
    cons[above & ~domain.solid] = force
    return cons


def solve_cell(surface: SurfaceSpec, coeffs, r: int, eps_over_h: int,
               which: str, boundary: str = lat.FREE, t: float = 0.0):
    """Solve one cell problem; returns (energy, minimizer LabelField)."""
    if abs(coeffs.cos_theta_Y) >= 1:
        raise ValueError("cell problems require |cos_theta_Y| < 1")
    if t < 0:
        raise ValueError("constraint plane must sit at t >= 0")
    dom = cell_domain(surface, coeffs, r, eps_over_h, boundary)
    force = lat.FORCE_LIQUID if which == SL else lat.FORCE_VAPOR
    cons = _constraint_above(dom, force, t)
    prob = lat.build_cut_problem(dom, coeffs, cons)
    sol = mf.solve(prob, mf.SINK_SIDE)
    return sol.flow_value, sol.labeling


def sigma_SL(surface, coeffs, r, eps_over_h, t: float = 0.0):
    """Sigma_SL(U) per unit window area and its maximal minimizer."""
    e, field = solve_cell(surface, coeffs, r, eps_over_h, SL, t=t)
    return e / r ** surface.d, field


def sigma_SV(surface, coeffs, r, eps_over_h, t: float = 0.0):
    """Sigma_SV(U) per unit window area and its maximal minimizer."""
    e, field = solve_cell(surface, coeffs, r, eps_over_h, SV, t=t)
    return e / r ** surface.d, field


def cell_result(surface, coeffs, r, eps_over_h) -> CellResult:
    ssl, fsl = sigma_SL(surface, coeffs, r, eps_over_h)
    ssv, fsv = sigma_SV(surface, coeffs, r, eps_over_h)
    cth = (ssl - ssv) / coeffs.sigma_LV
    cth = max(-1.0, min(1.0, cth))
    return CellResult(window_r=r, Sigma_SL=ssl, Sigma_SV=ssv,
                      cos_Theta_Y=cth, minimizer_SL=fsl, minimizer_SV=fsv)


def fit_inverse_r(r_values, data):
    """Least-squares fit data(r) ~ a + b/r; returns (a, b, max residual)."""
    r = np.asarray(r_values, dtype=float)
    y = np.asarray(data, dtype=float)
    A = np.stack([np.ones_like(r), 1.0 / r], axis=1)
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.abs(A @ np.array([a, b]) - y).max())
    return float(a), float(b), resid


def closed_forms(surface: SurfaceSpec, cos_theta_Y: float
                 ) -> tuple[float, float]:
    """(cos_theta_W, cos_theta_CB) from the staircase summary."""
    summ = summarize(surface)
    w = cos_theta_Y * summ.roughness_rho
    sign = 1.0 if cos_theta_Y >= 0 else -1.0
    cb = cos_theta_Y * summ.pillar_fraction_f \
        + sign * (1.0 - summ.pillar_fraction_f)
    return w, cb


def wenzel_threshold(surface: SurfaceSpec) -> float:
    """Sufficient smallness bound on |cos_theta_Y| for Wenzel exactness on
    flat-topped staircase pillars: the solid boundary in one period is
    covered by 2 + 2d flat graph pieces (top, floor, 2d wall directions),
    each with zero slope, giving 1 / (2 + 2d)."""
    if surface.kind == "flat":
        return 1.0
    return 1.0 / (2 + 2 * surface.d)


def effective_angles(surface: SurfaceSpec, coeffs, r_list,
                     eps_over_h: int = 8, regime_tol: float = 0.02
                     ) -> EffectiveAngles:
    """Window sweep + 1/r extrapolation + regime classification."""
    if len(r_list) < 3:
        raise ValueError("need at least three window sizes for the fit")
    results = [cell_result(surface, coeffs, r, eps_over_h) for r in r_list]
    rs = [c.window_r for c in results]
    a, _b, resid = fit_inverse_r(rs, [c.cos_Theta_Y for c in results])
    a = max(-1.0, min(1.0, a))
    ssl_bar, _, _ = fit_inverse_r(rs, [c.Sigma_SL for c in results])
    ssv_bar, _, _ = fit_inverse_r(rs, [c.Sigma_SV for c in results])
    w, cb = closed_forms(surface, coeffs.cos_theta_Y)
    dw, dcb = abs(a - w), abs(a - cb)
    if min(dw, dcb) > regime_tol:
        regime = INTERMEDIATE
    elif dw <= dcb:
        regime = WENZEL
    else:
        regime = CASSIE_BAXTER
    return EffectiveAngles(cos_theta_bar=a, cos_theta_W=w, cos_theta_CB=cb,
                           regime=regime, extrapolation_residual=resid,
                           sigma_SL_bar=ssl_bar, sigma_SV_bar=ssv_bar,
                           wenzel_threshold=wenzel_threshold(surface),
                           results=results)


def periodic_minimizer(surface: SurfaceSpec, coeffs, which: str,
                       eps_over_h: int = 8,
                       sigma_bar: Optional[float] = None,
                       tol: float = 1e-6):
    """Cell problem on one period with wrapped lateral boundary (the
    1-periodic minimizer); optionally checks its per-period energy against
    an extrapolated sigma_bar."""
    e, field = solve_cell(surface, coeffs, 1, eps_over_h, which,
                          boundary=lat.PERIODIC)
    if sigma_bar is not None and abs(e - sigma_bar) > tol:
        raise AssertionError(
            f"1-periodic energy {e!r} != extrapolated {sigma_bar!r}")
    return field, e


@dataclass
class SweepRow:
    cos_theta_Y: float
    angles: EffectiveAngles


@dataclass
class SweepReport:
    rows: list
    concave_ok: bool
    slope_ok: bool
    symmetry_ok: bool
    bound_ok: bool
    min_degeneracy_gap: float
    max_second_difference: float


def _angle_point(args):
    surface, x, r_list, eps_over_h, sigma_LV, sigma_SV = args
    co = lat.coeffs_from_angle(x, sigma_LV=sigma_LV, sigma_SV=sigma_SV)
    out = effective_angles(surface, co, r_list, eps_over_h)
    out.results = None      # keep worker payloads light
    return out


def concavity_sweep(surface: SurfaceSpec, cos_values, r_list,
                    eps_over_h: int = 8, sigma_LV: float = 1.0,
                    sigma_SV: float = 1.0, second_diff_tol: float = 0.01,
                    slope_tol: float = 0.01, bound_tol: float = 0.02,
                    symmetry_tol: float = 0.005,
                    workers: int = 1) -> SweepReport:
    """Sweep cos_theta_Y, check concavity (hydrophobic half), secant slope
    bounds f <= slope <= rho, the Wenzel/CB upper bound, the nondegeneracy
    gap 1 - |cos_theta_bar| > 0, and odd symmetry under
    cos_theta_Y -> -cos_theta_Y.  ``workers > 1`` fans the angle points
    out to a process pool; results are ordered by angle either way."""
    xs = sorted(float(x) for x in cos_values)
    if any(abs(x) >= 1 for x in xs):
        raise ValueError("cos_theta_Y values must lie in (-1, 1)")
    summ = summarize(surface)

    needed = list(dict.fromkeys(xs + [-x for x in xs if x > 1e-12]))
    args = [(surface, x, tuple(r_list), eps_over_h, sigma_LV, sigma_SV)
            for x in needed]
    if workers > 1 and len(args) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cache = dict(zip(needed, pool.map(_angle_point, args)))
    else:
        cache = {x: _angle_point(a) for x, a in zip(needed, args)}

    def bar(x):
        return cache[x]

    rows = [SweepRow(x, bar(x)) for x in xs]
    ys = [r.angles.cos_theta_bar for r in rows]

    # concavity on the hydrophobic half via discrete second differences
    max_dd = -np.inf
    concave_ok = True
    for i in range(1, len(xs) - 1):
        if xs[i - 1] < -1e-12:
            continue
        h1, h2 = xs[i] - xs[i - 1], xs[i + 1] - xs[i]
        dd = (ys[i + 1] - ys[i]) / h2 - (ys[i] - ys[i - 1]) / h1
        max_dd = max(max_dd, dd)
        if dd > second_diff_tol:
            concave_ok = False

    slope_ok = True
    for i in range(len(xs) - 1):
        if xs[i] < -1e-12:
            continue
        s = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        if not (summ.pillar_fraction_f - slope_tol <= s
                <= summ.roughness_rho + slope_tol):
            slope_ok = False

    bound_ok = True
    for r in rows:
        cap = min(abs(r.angles.cos_theta_W), abs(r.angles.cos_theta_CB))
        if abs(r.angles.cos_theta_bar) > cap + bound_tol:
            bound_ok = False

    gap = min(1.0 - abs(y) for y in ys)

    symmetry_ok = True
    for x, y in zip(xs, ys):
        if x <= 1e-12:
            continue
        y_m = bar(-x).cos_theta_bar
        if abs(y_m + y) > symmetry_tol:
            symmetry_ok = False

    return SweepReport(rows=rows, concave_ok=concave_ok, slope_ok=slope_ok,
                       symmetry_ok=symmetry_ok, bound_ok=bound_ok,
                       min_degeneracy_gap=float(gap),
                       max_second_difference=float(max_dd))


def write_cell_csv(path, surface_id: str, rows) -> None:
    """One CSV row per (surface, cos_theta_Y, r) cell solve."""
    with open(path, "w") as fh:
        fh.write("surface,cos_theta_Y,r,Sigma_SL,Sigma_SV,cos_Theta_Y\n")
        for cos_y, res in rows:
            for c in (res if isinstance(res, list) else [res]):
                fh.write(f"{surface_id},{cos_y!r},{c.window_r},"
                         f"{c.Sigma_SL!r},{c.Sigma_SV!r},"
                         f"{c.cos_Theta_Y!r}\n")
