"""Periodic rough surfaces on the unit cell.

A surface is the subgraph region {z <= phi(x)} of a 1-periodic height
function phi on [0,1)^d, d in {1, 2}, sampled as a piecewise-constant
staircase with ``cells_per_period`` samples per axis.  Heights are
normalized to max phi = 0 and min phi = -M.

Geometric summaries (roughness, pillar-top fraction) are computed on the
staircase itself, not on any smooth interpolant, so that they agree exactly
with what a lattice discretization of the solid wall sees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

FLAT = "flat"
SAMPLED = "sampled"


@dataclass(frozen=True)
class SurfaceSpec:
    """Periodic surface description.

    Parameters
    ----------
    kind : str
        ``"flat"`` or ``"sampled"``.
    d : int
        Number of lateral axes (1 or 2); ambient space has d+1 axes.
    depth_M : float
        Groove depth; heights live in [-M, 0].
    cells_per_period : int
        Samples per axis of one periodicity cell.
    heights : np.ndarray
        Shape ``(cells_per_period,)*d`` height table (row-major); all zeros
        for a flat surface.
    """

    kind: str
    d: int
    depth_M: float
    cells_per_period: int
    heights: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"d must be 1 or 2, got {self.d}")
        if self.depth_M < 0:
            raise ValueError("depth_M must be nonnegative")
        if self.cells_per_period < 1:
            raise ValueError("cells_per_period must be positive")
        if self.heights is None:
            object.__setattr__(
                self, "heights",
                np.zeros((self.cells_per_period,) * self.d))
        h = np.asarray(self.heights, dtype=float)
        if h.shape != (self.cells_per_period,) * self.d:
            raise ValueError("height table shape mismatch")
        if h.min() < -self.depth_M - 1e-12 or h.max() > 1e-12:
            raise ValueError("heights must lie in [-M, 0]")
        if abs(h.max()) > 1e-12:
            raise ValueError("normalization requires max height = 0")
        if self.depth_M > 0 and abs(h.min() + self.depth_M) > 1e-12:
            raise ValueError("normalization requires min height = -M")
        object.__setattr__(self, "heights", h)

    def height_at_index(self, idx) -> np.ndarray:
        """Height at integer sample indices (periodic wrap).

        ``idx`` is a length-d sequence of integer arrays.
        """
        wrapped = tuple(np.asarray(i) % self.cells_per_period for i in idx)
        return self.heights[wrapped]


@dataclass(frozen=True)
class SurfaceSummary:
    roughness_rho: float
    pillar_fraction_f: float
    flat_top_area: float


def flat_surface(d: int = 1) -> SurfaceSpec:
    return SurfaceSpec(kind=FLAT, d=d, depth_M=0.0, cells_per_period=4)


def make_pillar_surface(f: float, M: float, cells_per_period: int,
                        d: int = 1) -> SurfaceSpec:
    """Flat-topped pillar surface: phi = 0 on a centered axis-aligned block
    of cell fraction closest to ``f``, and phi = -M elsewhere.

    The realized fraction (exact rational count / cells^d) may differ from
    the request; read it back from :func:`summarize`.
    """
    if not 0.0 < f < 1.0:
        raise ValueError("pillar fraction f must lie in (0,1); "
                         "use flat_surface() for f = 1")
    if M < 0:
        raise ValueError("pillar height M must be nonnegative")
    if cells_per_period < 4:
        raise ValueError("cells_per_period must be >= 4")
    n = cells_per_period
    if f * n**d < 1:
        raise ValueError("pillar smaller than one sample cell")
    heights = np.full((n,) * d, -float(M))
    if d == 1:
        side = max(1, min(n - 1, round(f * n)))
        lo = (n - side) // 2
        heights[lo:lo + side] = 0.0
    else:
        # closest realizable count with a near-square block
        target = f * n * n
        best = None
        for sx in range(1, n):
            sy = max(1, min(n - 1, round(target / sx)))
            err = abs(sx * sy - target)
            aspect = max(sx, sy) / min(sx, sy)
            key = (err, aspect, sx)
            if best is None or key < best[0]:
                best = (key, sx, sy)
        _, sx, sy = best
        lox, loy = (n - sx) // 2, (n - sy) // 2
        heights[lox:lox + sx, loy:loy + sy] = 0.0
    if M == 0:
        return flat_surface(d)
    return SurfaceSpec(kind=SAMPLED, d=d, depth_M=float(M),
                       cells_per_period=n, heights=heights)


def summarize(surface: SurfaceSpec) -> SurfaceSummary:
    """Staircase-geometry summary of one periodicity cell.

    Roughness is the BV graph area of the staircase: horizontal top area
    (always 1 per unit cell) plus the total jump variation across sample
    boundaries (periodic wrap included).  The pillar fraction is the measure
    of {phi = 0}.
    """
    if surface.kind == FLAT:
        return SurfaceSummary(1.0, 1.0, 1.0)
    n = surface.cells_per_period
    hgt = surface.heights
    cell = Fraction(1, n) ** surface.d
    # lateral jump area: |phi_i - phi_j| * (sample cell side)^(d-1)
    side = Fraction(1, n) ** (surface.d - 1)
    jumps = 0.0
    for ax in range(surface.d):
        diff = np.abs(hgt - np.roll(hgt, 1, axis=ax))
        jumps += float(side) * float(diff.sum())
    rho = 1.0 + jumps
    f = float(cell) * int(np.count_nonzero(hgt >= -1e-12))
    return SurfaceSummary(roughness_rho=rho, pillar_fraction_f=f,
                          flat_top_area=f)


def save_surface(surface: SurfaceSpec, path) -> None:
    """Plain-text serialization: header lines then a row-major height table."""
    with open(path, "w") as fh:
        fh.write(f"kind {surface.kind}\n")
        fh.write(f"d {surface.d}\n")
        fh.write(f"depth_M {surface.depth_M!r}\n")
        fh.write(f"cells_per_period {surface.cells_per_period}\n")
        if surface.kind == SAMPLED:
            fh.write("heights\n")
            table = np.atleast_2d(surface.heights)
            for row in table:
                fh.write(" ".join(repr(v) for v in row.tolist()) + "\n")


def load_surface(path) -> SurfaceSpec:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    meta = {}
    i = 0
    while i < len(lines) and lines[i] and lines[i].split()[0] != "heights":
        key, val = lines[i].split(None, 1)
        meta[key] = val
        i += 1
    kind = meta["kind"]
    d = int(meta["d"])
    M = float(meta["depth_M"])
    n = int(meta["cells_per_period"])
    if kind == FLAT:
        return flat_surface(d)
    rows = [np.array([float(v) for v in ln.split()])
            for ln in lines[i + 1:] if ln.strip()]
    heights = np.vstack(rows) if d == 2 else np.concatenate(rows)
    return SurfaceSpec(kind=kind, d=d, depth_M=M, cells_per_period=n,
                       heights=heights.reshape((n,) * d))
