"""Cubic-lattice discretization and exact energy evaluation.

A :class:`Domain` freezes a box ``[lo, hi]`` into cells of side ``h`` with a
solid mask taken from a scaled periodic surface: cell centers with
``z <= eps * phi(x / eps)`` are solid.  A :class:`LabelField` assigns each
remaining cell Liquid or Vapor, and :func:`energy` evaluates the interfacial
energy of the labeling as a weighted face-area sum:

    E = sigma_LV * area_LV + sigma_SL * area_SL + sigma_SV * area_SV

Liquid-vapor area uses the multi-direction stencil of :mod:`capdrop.stencil`
(exact on axis-aligned interfaces); solid-contact areas use the plain axis
face count, which is exact for the staircase wall.

Face ownership rule (used for region sums and exact additivity): every
unordered cell pair appears once, with offset whose first nonzero component
is positive, and is owned by the base cell of that offset -- except
solid-contact faces, which are owned by the fluid cell, and domain-boundary
faces, which are owned by the interior cell.  Region sums include exactly
the faces whose owner's center lies in the region, so disjoint regions add
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stencil import AXIS_OFFSETS, PAIR_FAMILIES
from . import maxflow

VAPOR = np.int8(0)
LIQUID = np.int8(1)
SOLID = np.int8(2)

WALLED = "walled"
FREE = "free"
PERIODIC = "periodic"

_REL_TOL = 1e-9


@dataclass(frozen=True)
class Coefficients:
    """Interfacial energy densities; all three must be positive.

    The derived Young angle uses cos_theta_Y = (sigma_SL - sigma_SV) /
    sigma_LV with the sign convention that hydrophobic means
    cos_theta_Y >= 0.
    """

    sigma_LV: float
    sigma_SL: float
    sigma_SV: float

    def __post_init__(self):
        if min(self.sigma_LV, self.sigma_SL, self.sigma_SV) <= 0:
            raise ValueError("all surface tensions must be positive")

    @property
    def cos_theta_Y(self) -> float:
        return (self.sigma_SL - self.sigma_SV) / self.sigma_LV


def coeffs_from_angle(cos_theta_Y: float, sigma_LV: float = 1.0,
                      sigma_SV: float = 1.0) -> Coefficients:
    """Convenience constructor fixing sigma_LV, sigma_SV and the angle."""
    return Coefficients(sigma_LV=sigma_LV,
                        sigma_SL=sigma_SV + cos_theta_Y * sigma_LV,
                        sigma_SV=sigma_SV)


class Domain:
    """Frozen discretization of a box with its solid mask.

    Axes are ordered lateral-first, vertical (z) last.  The lateral origin
    must sit on a multiple of epsilon so cell centers sample the periodic
    surface exactly by index arithmetic.
    """

    def __init__(self, surface, coeffs, lo, hi, h, epsilon, boundary):
        if boundary not in (WALLED, FREE, PERIODIC):
            raise ValueError(f"unknown boundary policy {boundary!r}")
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        dim = lo.size
        if dim != surface.d + 1:
            raise ValueError("extents must have one more axis than the "
                             "surface lateral dimension")
        k = round(epsilon / h)
        if k < 1 or abs(epsilon - k * h) > _REL_TOL * epsilon:
            raise ValueError("epsilon/h must be a positive integer")
        shape = []
        for ax in range(dim):
            n = round((hi[ax] - lo[ax]) / h)
            if n < 1 or abs((hi[ax] - lo[ax]) - n * h) > _REL_TOL * h:
                raise ValueError("box extents must be integer multiples of h")
            shape.append(n)
        for ax in range(dim - 1):
            if abs(lo[ax] / epsilon - round(lo[ax] / epsilon)) > _REL_TOL:
                raise ValueError("lateral origin must align with a period")
        if lo[-1] > -epsilon * surface.depth_M - 0.5 * h + _REL_TOL * h:
            raise ValueError("box too shallow to contain the grooves")

        self.surface = surface
        self.coeffs = coeffs
        self.lo = lo
        self.hi = hi
        self.h = float(h)
        self.epsilon = float(epsilon)
        self.cells_per_eps = k
        self.boundary = boundary
        self.shape = tuple(shape)
        self.dim = dim
        self.d = dim - 1
        self.solid = self._solid_mask()
        self.solid.setflags(write=False)

    def _solid_mask(self) -> np.ndarray:
        n_s = self.surface.cells_per_period
        k = self.cells_per_eps
        idx = []
        for ax in range(self.d):
            i = np.arange(self.shape[ax])
            base = round(self.lo[ax] / self.epsilon) * k
            m = (base + i) % k          # micro cell within the period
            idx.append((2 * m + 1) * n_s // (2 * k))
        if self.d == 1:
            phi = self.surface.height_at_index((idx[0],))[:, None]
        else:
            ix, iy = np.meshgrid(idx[0], idx[1], indexing="ij")
            phi = self.surface.height_at_index((ix, iy))[:, :, None]
        zc = self.lo[-1] + (np.arange(self.shape[-1]) + 0.5) * self.h
        return zc <= self.epsilon * phi + _REL_TOL * self.h

    def centers(self, ax: int) -> np.ndarray:
        return self.lo[ax] + (np.arange(self.shape[ax]) + 0.5) * self.h

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def face_area(self) -> float:
        return self.h ** self.d

    def solid_cell_count(self) -> int:
        return int(np.count_nonzero(self.solid))

    def index_box(self, region) -> tuple[tuple[int, int], ...]:
        """Convert a real-coordinate box ((lo...), (hi...)) to per-axis owner
        index ranges (cells whose center lies in [lo, hi))."""
        if region is None:
            return tuple((0, n) for n in self.shape)
        rlo, rhi = region
        out = []
        for ax in range(self.dim):
            c0 = self.lo[ax] + 0.5 * self.h
            a = max(0, math.ceil((rlo[ax] - c0) / self.h - _REL_TOL))
            b = min(self.shape[ax],
                    math.floor((rhi[ax] - c0) / self.h - _REL_TOL) + 1)
            if a > self.shape[ax] or b < 0:
                raise ValueError("region exceeds domain")
            out.append((a, min(b, self.shape[ax])))
        return tuple(out)

    def new_field(self, fill=VAPOR) -> "LabelField":
        labels = np.full(self.shape, fill, dtype=np.int8)
        labels[self.solid] = SOLID
        return LabelField(self, labels)


def build_domain(surface, coeffs, extents, h, epsilon, boundary_policy=WALLED
                 ) -> Domain:
    """``extents`` is a sequence of (lo, hi) pairs, lateral axes first."""
    lo = [e[0] for e in extents]
    hi = [e[1] for e in extents]
    return Domain(surface, coeffs, lo, hi, h, epsilon, boundary_policy)


class LabelField:
    """Binary labeling over the non-solid cells of a domain."""

    def __init__(self, domain: Domain, labels: np.ndarray):
        labels = np.asarray(labels, dtype=np.int8)
        if labels.shape != domain.shape:
            raise ValueError("label array shape mismatch")
        if not np.array_equal(labels == SOLID, domain.solid):
            raise ValueError("labels disagree with the frozen solid mask")
        self.domain = domain
        self.labels = labels

    def copy(self) -> "LabelField":
        return LabelField(self.domain, self.labels.copy())

    def volume(self) -> float:
        return int(np.count_nonzero(self.labels == LIQUID)) \
            * self.domain.cell_volume

    def liquid_cells(self) -> int:
        return int(np.count_nonzero(self.labels == LIQUID))

    def __eq__(self, other):
        return (isinstance(other, LabelField)
                and self.domain is other.domain
                and np.array_equal(self.labels, other.labels))


def liquid_above(domain: Domain, z_level: float = 0.0) -> LabelField:
    """Template field: liquid exactly on non-solid cells with center above
    ``z_level`` (flat composite interface)."""
    field = domain.new_field(VAPOR)
    zc = domain.centers(domain.dim - 1)
    above = np.broadcast_to(zc > z_level, domain.shape)
    field.labels[above & ~domain.solid] = LIQUID
    return field


def fill_all(domain: Domain) -> LabelField:
    """Template field: liquid on every non-solid cell (filled grooves)."""
    return domain.new_field(LIQUID)


def replace_region(field: LabelField, region, template: LabelField
                   ) -> LabelField:
    """Return a new field equal to ``template`` inside ``region`` (owner
    cells) and to ``field`` outside."""
    dom = field.domain
    box = dom.index_box(region)
    sl = tuple(slice(a, b) for a, b in box)
    if not np.array_equal(template.labels[sl] == SOLID, dom.solid[sl]):
        raise ValueError("template solid mask mismatch in region")
    out = field.labels.copy()
    out[sl] = template.labels[sl]
    return LabelField(dom, out)


@dataclass(frozen=True)
class EnergyBreakdown:
    area_LV: float
    area_SL: float
    area_SV: float
    total_E: float
    total_E_prime: float

    def csv_row(self, region_id="all") -> str:
        return (f"{region_id},{self.area_LV!r},{self.area_SL!r},"
                f"{self.area_SV!r},{self.total_E!r}")


def _pair_views(dom: Domain, arrays, offset, box):
    """Aligned (base, partner) views for one stencil offset, restricted to
    owner cells inside the index box.  Returns a list of view tuples (one
    per input array) or None if the intersection is empty.

    Lateral axes wrap when the domain is periodic; the z axis never wraps.
    """
    periodic = dom.boundary == PERIODIC
    src = arrays
    base_sl = []
    part_sl = []
    for ax, v in enumerate(offset):
        n = dom.shape[ax]
        lo_r, hi_r = box[ax]
        lateral = ax < dom.d
        if lateral and periodic and v != 0:
            a0, a1 = lo_r, hi_r
            base_sl.append(slice(a0, a1))
            part_sl.append(None)  # handled by roll
        else:
            a0 = max(lo_r, 0 if v >= 0 else -v)
            a1 = min(hi_r, n - v if v >= 0 else n)
            if a0 >= a1:
                return None
            base_sl.append(slice(a0, a1))
            part_sl.append(slice(a0 + v, a1 + v))
    rolled = src
    if periodic:
        for ax, v in enumerate(offset):
            if ax < dom.d and v != 0:
                rolled = [np.roll(a, -v, axis=ax) for a in rolled]
    out = []
    for orig, rl in zip(src, rolled):
        psl = tuple(b if p is None else p
                    for b, p in zip(base_sl, part_sl))
        out.append((orig[tuple(base_sl)], rl[psl]))
    return out


def energy(field: LabelField, coeffs: Coefficients, region=None
           ) -> EnergyBreakdown:
    """Exact face-area energy of the labeling inside ``region``.

    ``region`` is a real-coordinate box ((lo...), (hi...)) or None for the
    whole domain; faces are counted by owner cell (see module docstring).
    """
    dom = field.domain
    box = dom.index_box(region)
    L = field.labels
    fa = dom.face_area

    lv_pairs = 0.0
    for offset, w in PAIR_FAMILIES[dom.dim]:
        views = _pair_views(dom, [L], offset, box)
        if views is None:
            continue
        A, B = views[0]
        cut = (A != SOLID) & (B != SOLID) & (A != B)
        lv_pairs += w * np.count_nonzero(cut)

    sl_pairs = 0
    sv_pairs = 0
    for offset in AXIS_OFFSETS[dom.dim]:
        for sign in (1, -1):
            off = tuple(sign * v for v in offset)
            # owner = base (fluid) cell; partner solid
            views = _pair_views(dom, [L], off, box)
            if views is None:
                continue
            A, B = views[0]
            solid_face = B == SOLID
            sl_pairs += np.count_nonzero(solid_face & (A == LIQUID))
            sv_pairs += np.count_nonzero(solid_face & (A == VAPOR))

    wall_lv = 0
    if dom.boundary == WALLED:
        # lateral walls and the top lid cost sigma_LV per liquid face;
        # the bottom boundary is below the solid and never exposed
        layers = []
        for ax in range(dom.d):
            n = dom.shape[ax]
            lo_r, hi_r = box[ax]
            if lo_r <= 0 < hi_r:
                layers.append((ax, 0))
            if lo_r <= n - 1 < hi_r:
                layers.append((ax, n - 1))
        nz = dom.shape[-1]
        if box[-1][0] <= nz - 1 < box[-1][1]:
            layers.append((dom.dim - 1, nz - 1))
        for ax, pos in layers:
            sl = [slice(a, b) for a, b in box]
            sl[ax] = slice(pos, pos + 1)
            wall_lv += np.count_nonzero(L[tuple(sl)] == LIQUID)

    area_LV = (lv_pairs + wall_lv) * fa
    area_SL = sl_pairs * fa
    area_SV = sv_pairs * fa
    total = (coeffs.sigma_LV * area_LV + coeffs.sigma_SL * area_SL
             + coeffs.sigma_SV * area_SV)
    prime = area_LV + coeffs.cos_theta_Y * area_SL
    return EnergyBreakdown(area_LV=area_LV, area_SL=area_SL, area_SV=area_SV,
                           total_E=total, total_E_prime=prime)


FORCE_NONE = np.int8(-1)
FORCE_VAPOR = np.int8(0)
FORCE_LIQUID = np.int8(1)


def build_cut_problem(domain: Domain, coeffs: Coefficients,
                      constraints: np.ndarray | None = None
                      ) -> "maxflow.CutProblem":
    """Assemble the pairwise/unary cut encoding of the energy.

    ``constraints`` is an optional int8 array over cells taking values
    FORCE_NONE / FORCE_VAPOR / FORCE_LIQUID; constraints on solid cells are
    ignored.  The resulting problem's cut value of any admissible labeling
    equals its lattice energy exactly (same face accounting).
    """
    dim = domain.dim
    fa = domain.face_area
    nonsolid = ~domain.solid
    node_of = np.cumsum(nonsolid.ravel()).reshape(domain.shape) - 1
    node_of = np.where(nonsolid, node_of, -1).astype(np.int64)
    n_nodes = int(np.count_nonzero(nonsolid))
    full = tuple((0, n) for n in domain.shape)

    pu, pv, pw = [], [], []
    for offset, w in PAIR_FAMILIES[dim]:
        views = _pair_views(domain, [node_of], offset, full)
        if views is None:
            continue
        A, B = views[0]
        m = (A >= 0) & (B >= 0)
        pu.append(A[m])
        pv.append(B[m])
        pw.append(np.full(int(m.sum()), coeffs.sigma_LV * w * fa))
    pair_u = np.concatenate(pu).astype(np.int64)
    pair_v = np.concatenate(pv).astype(np.int64)
    pair_w = np.concatenate(pw)

    # unary terms: solid-contact faces (axis directions, both ways) and,
    # for walled domains, boundary faces
    solid_faces = np.zeros(domain.shape, dtype=np.int64)
    wall_faces = np.zeros(domain.shape, dtype=np.int64)
    for offset in AXIS_OFFSETS[dim]:
        for sign in (1, -1):
            off = tuple(sign * v for v in offset)
            views = _pair_views(domain, [node_of], off, full)
            if views is not None:
                A, B = views[0]
                # base fluid, partner solid; base view aliases solid_faces
                base_box = _pair_views(domain, [solid_faces], off, full)[0][0]
                base_box += ((A >= 0) & (B < 0)).astype(np.int64)
    if domain.boundary == WALLED:
        for ax in range(domain.d):
            sl0 = [slice(None)] * dim
            sl0[ax] = 0
            wall_faces[tuple(sl0)] += 1
            sl1 = [slice(None)] * dim
            sl1[ax] = domain.shape[ax] - 1
            wall_faces[tuple(sl1)] += 1
        top = [slice(None)] * dim
        top[-1] = domain.shape[-1] - 1
        wall_faces[tuple(top)] += 1

    sf = solid_faces[nonsolid].astype(float)
    wf = wall_faces[nonsolid].astype(float)
    cost_L = coeffs.sigma_SL * sf * fa + coeffs.sigma_LV * wf * fa
    cost_V = coeffs.sigma_SV * sf * fa

    if constraints is not None:
        c = np.asarray(constraints, dtype=np.int8)[nonsolid]
        cost_V = np.where(c == FORCE_LIQUID, np.inf, cost_V)
        cost_L = np.where(c == FORCE_VAPOR, np.inf, cost_L)
        if np.any((c == FORCE_LIQUID) & np.isinf(cost_L)):
            raise ValueError("conflicting hard constraints")

    cell_index = np.flatnonzero(nonsolid.ravel())
    return maxflow.CutProblem(
        num_nodes=n_nodes, pair_u=pair_u, pair_v=pair_v, pair_w=pair_w,
        cost_L=cost_L, cost_V=cost_V,
        vol_weight=domain.cell_volume,
        boundary_policy=domain.boundary,
        domain=domain, cell_index=cell_index)


def field_from_labels(domain: Domain, node_labels: np.ndarray,
                      cell_index: np.ndarray) -> LabelField:
    """Assemble a LabelField from per-node booleans (True = Liquid)."""
    flat = np.full(int(np.prod(domain.shape)), SOLID, dtype=np.int8)
    flat[cell_index] = np.where(node_labels, LIQUID, VAPOR)
    return LabelField(domain, flat.reshape(domain.shape))


def dump_field(field: LabelField, path) -> None:
    """Grid dump: text header (dims, h, epsilon) + raw int8 payload."""
    dom = field.domain
    with open(path, "wb") as fh:
        head = (f"capdrop-field dims={','.join(map(str, dom.shape))} "
                f"h={dom.h!r} epsilon={dom.epsilon!r} "
                f"lo={','.join(repr(v) for v in dom.lo.tolist())}\n")
        fh.write(head.encode())
        fh.write(field.labels.tobytes())


def load_field_labels(path) -> tuple[np.ndarray, dict]:
    """Read back a grid dump: returns (labels array, header metadata)."""
    with open(path, "rb") as fh:
        head = fh.readline().decode().strip()
        payload = fh.read()
    parts = dict(p.split("=", 1) for p in head.split()[1:])
    shape = tuple(int(v) for v in parts["dims"].split(","))
    labels = np.frombuffer(payload, dtype=np.int8).reshape(shape).copy()
    meta = {"h": float(parts["h"]), "epsilon": float(parts["epsilon"]),
            "lo": [float(v) for v in parts["lo"].split(",")]}
    return labels, meta
