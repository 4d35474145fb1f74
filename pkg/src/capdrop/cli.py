"""Command-line front end: config parsing, orchestration, persistence.

Config files are plain line-oriented text::

    # comment
    [section]
    key = value

Sections and keys
-----------------
``[run]``
    ``task``  one of ``cell | sweep-angle | droplet | homogenize |
    profile``; ``out`` output directory (overridable by ``--out`` or the
    ``CAPDROP_OUT`` environment variable, the only environment override).
``[surface]``
    ``kind`` (``flat`` | ``pillar``), ``d`` (1 or 2); for pillars
    ``f`` (top fraction), ``M`` (groove depth), ``cells_per_period``.
``[coefficients]``
    ``sigma_LV`` (required) and either ``cos_theta_Y`` or both
    ``sigma_SL`` and ``sigma_SV``.
``[geometry]``
    ``eps`` or ``eps_list`` (comma separated); ``h`` or ``eps_over_h``;
    ``box_lateral`` (comma-separated ``lo:hi`` per lateral axis) and
    ``z_top`` for droplet boxes; ``volume`` for droplet targets;
    ``r_list`` window sizes; ``cos_values`` for the angle sweep.
``[tolerances]``
    ``tol_cells`` (volume slack, cells); ``regime_tol``.

Every run writes its CSV artifacts plus ``manifest.txt`` (config hash,
package/library versions, output file hashes, wall time) into the output
directory.  Outputs are bit-exact across repeated runs on identical
inputs and independent of ``--workers``.

Exit codes: 0 success, 2 config validation failure, 3 infeasible
problem, 4 internal invariant breach.
"""
from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import cellproblem as cp
from . import droplet as dr
from . import homogenize as hg
from . import lattice as lat
from . import maxflow as mf
from . import stencil
from . import surface as sf

TASKS = ("cell", "sweep-angle", "droplet", "homogenize", "profile")

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_INVARIANT = 4


class ConfigError(Exception):
    """Invalid or missing configuration; message names the field."""


class InvariantError(Exception):
    """An internal consistency check failed."""


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def parse_config(path) -> dict:
    """Parse the line-oriented ``[section]`` / ``key = value`` format."""
    sections: dict = {}
    current = None
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {raw.strip()!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        sections[current][key] = value
    return sections


def _get(cfg, section, key, conv=str, default=None, required=False):
    sec = cfg.get(section, {})
    if key not in sec:
        if required:
            raise ConfigError(f"missing required field [{section}] {key}")
        return default
    try:
        return conv(sec[key])
    except (ValueError, TypeError) as exc:
        raise ConfigError(
            f"field [{section}] {key} = {sec[key]!r}: {exc}") from exc


def _float_list(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _extent_list(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        lo, _, hi = tok.partition(":")
        out.append((float(lo), float(hi)))
    return out


def build_surface(cfg) -> sf.SurfaceSpec:
    kind = _get(cfg, "surface", "kind", str, required=True)
    d = _get(cfg, "surface", "d", int, default=1)
    if d not in (1, 2):
        raise ConfigError(f"field [surface] d = {d}: must be 1 or 2")
    if kind == "flat":
        return sf.flat_surface(d)
    if kind == "pillar":
        f = _get(cfg, "surface", "f", float, required=True)
        M = _get(cfg, "surface", "M", float, required=True)
        n = _get(cfg, "surface", "cells_per_period", int, default=8)
        try:
            return sf.make_pillar_surface(f, M, n, d=d)
        except ValueError as exc:
            raise ConfigError(f"field [surface]: {exc}") from exc
    raise ConfigError(f"field [surface] kind = {kind!r}: "
                      "must be 'flat' or 'pillar'")


def build_coefficients(cfg) -> lat.Coefficients:
    sigma_LV = _get(cfg, "coefficients", "sigma_LV", float, required=True)
    cos = _get(cfg, "coefficients", "cos_theta_Y", float)
    try:
        if cos is not None:
            return lat.coeffs_from_angle(cos, sigma_LV=sigma_LV)
        sigma_SL = _get(cfg, "coefficients", "sigma_SL", float,
                        required=True)
        sigma_SV = _get(cfg, "coefficients", "sigma_SV", float,
                        required=True)
        return lat.Coefficients(sigma_LV=sigma_LV, sigma_SL=sigma_SL,
                                sigma_SV=sigma_SV)
    except ValueError as exc:
        raise ConfigError(f"field [coefficients]: {exc}") from exc


def _epsilons(cfg):
    eps_list = _get(cfg, "geometry", "eps_list", _float_list)
    if eps_list:
        return eps_list
    eps = _get(cfg, "geometry", "eps", float)
    if eps is None:
        raise ConfigError("missing required field [geometry] eps "
                          "(or eps_list)")
    return [eps]


def _h_for(cfg, eps):
    h = _get(cfg, "geometry", "h", float)
    if h is not None:
        return h
    k = _get(cfg, "geometry", "eps_over_h", int, default=8)
    if k < 1:
        raise ConfigError(f"field [geometry] eps_over_h = {k}: must be "
                          "a positive integer")
    return eps / k


def _box(cfg, surface):
    lateral = _get(cfg, "geometry", "box_lateral", _extent_list,
                   required=True)
    if len(lateral) != surface.d:
        raise ConfigError(f"field [geometry] box_lateral: expected "
                          f"{surface.d} extent(s), got {len(lateral)}")
    z_top = _get(cfg, "geometry", "z_top", float, required=True)
    return lateral, z_top


# ---------------------------------------------------------------------------
# integrity check (exit 4 on breach)
# ---------------------------------------------------------------------------

def integrity_check() -> None:
    """Cheap self-test of the weight tables and the cut solver; a failure
    means the installation (or an in-process patch) corrupted them."""
    for dim, fam in stencil.PAIR_FAMILIES.items():
        seen = set()
        for off, w in fam:
            if not (np.isfinite(w) and w > 0):
                raise InvariantError(
                    f"stencil weight {w!r} at offset {off} (dim {dim}) "
                    "is not a positive finite number")
            if off in seen:
                raise InvariantError(
                    f"duplicate stencil offset {off} (dim {dim})")
            seen.add(off)
    # 2-cell problem with a known closed-form minimum
    prob = mf.CutProblem(num_nodes=2, pair_u=np.array([0]),
                         pair_v=np.array([1]), pair_w=np.array([0.25]),
                         cost_L=np.array([1.0, 0.0]),
                         cost_V=np.array([0.0, 1.0]))
    sol = mf.solve(prob, mf.SINK_SIDE)
    if abs(sol.flow_value - 0.25) > 1e-12:
        raise InvariantError(
            f"reference 2-cell cut solved to {sol.flow_value!r}, "
            "expected 0.25: solver or capacity scaling corrupted")


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------

def _cell_point(args):
    surface, coeffs, r, eps_over_h = args
    res = cp.cell_result(surface, coeffs, r, eps_over_h)
    res.minimizer_SL = res.minimizer_SV = None
    return res


def task_cell(cfg, outdir, workers):
    surface = build_surface(cfg)
    coeffs = build_coefficients(cfg)
    r_list = _get(cfg, "geometry", "r_list", _int_list, default=[2, 4, 8])
    eps_over_h = _get(cfg, "geometry", "eps_over_h", int, default=8)
    args = [(surface, coeffs, r, eps_over_h) for r in r_list]
    if workers > 1 and len(args) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_cell_point, args))
    else:
        rows = [_cell_point(a) for a in args]
    cell_csv = outdir / "cell.csv"
    cp.write_cell_csv(cell_csv, surface.kind,
                      [(coeffs.cos_theta_Y, rows)])
    summary = outdir / "cell_summary.txt"
    lines = [f"surface = {surface.kind}",
             f"cos_theta_Y = {coeffs.cos_theta_Y!r}"]
    if len(r_list) >= 3:
        a, b, resid = cp.fit_inverse_r(
            r_list, [r.cos_Theta_Y for r in rows])
        lines += [f"cos_theta_bar_fit = {a!r}", f"slope_b = {b!r}",
                  f"fit_residual = {resid!r}"]
    summary.write_text("\n".join(lines) + "\n")
    return [cell_csv, summary]


def task_sweep_angle(cfg, outdir, workers):
    surface = build_surface(cfg)
    sigma_LV = _get(cfg, "coefficients", "sigma_LV", float, required=True)
    cos_values = _get(cfg, "geometry", "cos_values", _float_list,
                      default=list(np.linspace(0.0, 0.96, 9)))
    r_list = _get(cfg, "geometry", "r_list", _int_list, default=[2, 4, 8])
    eps_over_h = _get(cfg, "geometry", "eps_over_h", int, default=8)
    rep = cp.concavity_sweep(surface, cos_values, r_list,
                             eps_over_h=eps_over_h, sigma_LV=sigma_LV,
                             workers=workers)
    curve = outdir / "angle_curve.csv"
    with open(curve, "w") as fh:
        fh.write("cos_theta_Y,cos_theta_bar,cos_theta_W,cos_theta_CB,"
                 "regime,extrapolation_residual\n")
        for row in rep.rows:
            a = row.angles
            fh.write(f"{row.cos_theta_Y!r},{a.cos_theta_bar!r},"
                     f"{a.cos_theta_W!r},{a.cos_theta_CB!r},{a.regime},"
                     f"{a.extrapolation_residual!r}\n")
    flags = outdir / "regime_flags.txt"
    flags.write_text(
        f"concave_ok = {rep.concave_ok}\n"
        f"slope_ok = {rep.slope_ok}\n"
        f"symmetry_ok = {rep.symmetry_ok}\n"
        f"bound_ok = {rep.bound_ok}\n"
        f"min_degeneracy_gap = {rep.min_degeneracy_gap!r}\n"
        f"max_second_difference = {rep.max_second_difference!r}\n")
    return [curve, flags]


def task_droplet(cfg, outdir, workers):
    surface = build_surface(cfg)
    coeffs = build_coefficients(cfg)
    volume = _get(cfg, "geometry", "volume", float, required=True)
    tol_cells = _get(cfg, "tolerances", "tol_cells", int, default=0)
    eps = _epsilons(cfg)[0]
    h = _h_for(cfg, eps)
    box = _box(cfg, surface)
    try:
        dom = hg.sweep_domain(surface, coeffs, box, eps, h)
    except ValueError as exc:
        raise ConfigError(f"field [geometry]: {exc}") from exc
    res = dr.minimize_droplet(dom, coeffs, volume, tol_cells=tol_cells)
    csv = outdir / "droplet.csv"
    with open(csv, "w") as fh:
        fh.write("eps,h,volume,area_LV,area_SL,area_SV,total_E,"
                 "lambda_lo,lambda_hi,contact_width\n")
        fh.write(res.csv_row() + "\n")
    labels = outdir / "droplet_labels.dat"
    lat.dump_field(res.labeling, labels)
    return [csv, labels]


def _sweep_inputs(cfg):
    surface = build_surface(cfg)
    coeffs = build_coefficients(cfg)
    volume = _get(cfg, "geometry", "volume", float, required=True)
    tol_cells = _get(cfg, "tolerances", "tol_cells", int, default=0)
    epsilons = _epsilons(cfg)
    k = _get(cfg, "geometry", "eps_over_h", int, default=8)
    box = _box(cfg, surface)
    r_list = _get(cfg, "geometry", "r_list", _int_list, default=[2, 4, 8])
    return surface, coeffs, volume, tol_cells, epsilons, k, box, r_list


def task_homogenize(cfg, outdir, workers):
    (surface, coeffs, volume, tol_cells, epsilons, k, box,
     r_list) = _sweep_inputs(cfg)
    rep = hg.run_sweep(surface, coeffs, volume, box, epsilons,
                       h_rule=lambda e: e / k, r_list=r_list,
                       tol_cells=tol_cells, workers=workers)
    rate = outdir / "rate.csv"
    hg.write_rate_csv(rate, rep)
    summary = outdir / "homogenize_summary.txt"
    eff = rep.effective
    summary.write_text(
        f"cos_theta_bar = {eff.cos_theta_bar!r}\n"
        f"regime = {eff.regime}\n"
        f"energy_slope = {rep.energy_slope!r} "
        f"+- {rep.energy_slope_err!r}\n"
        f"l1_slope = {rep.l1_slope!r}\n"
        f"hausdorff_slope = {rep.hausdorff_slope!r}\n"
        f"construction_ok = {all(rep.construction_ok)}\n")
    return [rate, summary]


def task_profile(cfg, outdir, workers):
    (surface, coeffs, volume, tol_cells, epsilons, k, box,
     r_list) = _sweep_inputs(cfg)
    rep = hg.run_sweep(surface, coeffs, volume, box, epsilons,
                       h_rule=lambda e: e / k, r_list=r_list,
                       tol_cells=tol_cells, workers=workers)
    outputs = []
    for eps, drop in zip(rep.epsilons, rep.droplets):
        t_list = [j * eps for j in range(1, int(1.05 / eps) + 1)]
        prof = hg.perimeter_profile(drop, t_list)
        path = outdir / f"profile_eps_{eps!r}.csv"
        hg.write_profile_csv(path, prof)
        outputs.append(path)
    return outputs


TASK_FNS = {"cell": task_cell, "sweep-angle": task_sweep_angle,
            "droplet": task_droplet, "homogenize": task_homogenize,
            "profile": task_profile}


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(outdir, config_path, task, outputs, wall) -> Path:
    from . import KERNEL
    path = outdir / "manifest.txt"
    lines = [
        "# capdrop run manifest",
        f"task = {task}",
        f"config = {config_path}",
        f"config_sha256 = {_sha256_file(config_path)}",
        f"capdrop_version = {__version__}",
        f"numpy_version = {np.__version__}",
        f"maxflow_kernel = {KERNEL}",
        f"tolerance_float = 1e-9",
    ]
    for out in outputs:
        lines.append(f"output = {Path(out).name} "
                     f"sha256 = {_sha256_file(out)}")
    lines.append(f"wall_seconds = {wall:.3f}")
    path.write_text("\n".join(lines) + "\n")
    return path


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def run_verify() -> int:
    from . import verify
    results = verify.run_all()
    for res in results:
        print(res.line(), flush=True)
    n_fail = sum(1 for r in results if r.status == verify.FAIL)
    n_skip = sum(1 for r in results if r.status == verify.SKIP)
    print(f"{len(results) - n_fail - n_skip} passed, {n_fail} failed, "
          f"{n_skip} skipped")
    return 1 if n_fail else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="capdrop",
        description="Exact discrete minimizers for capillary drops on "
                    "periodic rough surfaces.")
    parser.add_argument("--config", metavar="PATH",
                        help="run configuration file")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (overrides config and the "
                             "CAPDROP_OUT environment variable)")
    parser.add_argument("--workers", metavar="N", type=int, default=1,
                        help="worker processes for sweep points")
    parser.add_argument("--task", metavar="NAME", choices=TASKS,
                        help="task selector (overrides config)")
    parser.add_argument("--verify", action="store_true",
                        help="run the acceptance-criteria suite")
    args = parser.parse_args(argv)

    try:
        integrity_check()
        if args.verify:
            return run_verify()
        if not args.config:
            parser.error("--config is required unless --verify is given")
        cfg = parse_config(args.config)
        task = args.task or _get(cfg, "run", "task", str)
        if task is None:
            raise ConfigError("missing required field [run] task "
                              "(or --task)")
        if task not in TASKS:
            raise ConfigError(f"field [run] task = {task!r}: must be one "
                              f"of {', '.join(TASKS)}")
        out = (args.out or os.environ.get("CAPDROP_OUT")
               or _get(cfg, "run", "out", str))
        if out is None:
            raise ConfigError("missing required field [run] out "
                              "(or --out / CAPDROP_OUT)")
        if args.workers < 1:
            raise ConfigError(f"--workers {args.workers}: must be >= 1")
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        outputs = TASK_FNS[task](cfg, outdir, args.workers)
        write_manifest(outdir, args.config, task, outputs,
                       time.perf_counter() - t0)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (mf.InfeasibleError, ValueError) as exc:
        # module preconditions reject the problem as posed
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvariantError, AssertionError, RuntimeError) as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
