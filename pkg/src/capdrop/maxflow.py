"""Exact global binary energy minimization by s-t min-cut.

Encoding: one node per non-solid cell, Liquid = source side.  The arc
``s -> i`` carries the Vapor cost of cell i, ``i -> t`` its Liquid cost, and
each label-changing pair of cells an undirected capacity equal to its
weighted face energy, so every cut value equals the lattice energy of the
corresponding labeling (up to the labeling-independent shift introduced by
the volume multiplier).  Submodularity of the face energy makes all
capacities nonnegative, hence the minimum cut is the exact global minimizer.

Capacities are scaled to 64-bit integers (power-of-two scale, recorded in
the solution) so flow values are exactly reproducible.  Hard label
constraints use a sentinel capacity exceeding the sum of all finite
capacities.

Degenerate minimizers are resolved by ``side_choice``: ``SOURCE_SIDE``
labels Liquid the nodes reachable from s in the residual graph (the minimal
minimizer, intersection of all minimizers); ``SINK_SIDE`` labels Liquid the
complement of the nodes that can reach t (the maximal minimizer, union of
all minimizers).

The inner kernel is compiled (Cython) when available and falls back to a
pure-Python implementation selected at import time; set
``CAPDROP_PURE_PYTHON=1`` to force the fallback (benchmarking aid).
"""

from __future__ import annotations

import heapq
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

if os.environ.get("CAPDROP_PURE_PYTHON"):
    from . import _pyflow as _kernel
    KERNEL = "python"
else:
    try:
        from . import _fastflow as _kernel
        KERNEL = "compiled"
    except ImportError:
        from . import _pyflow as _kernel
        KERNEL = "python"

SOURCE_SIDE = "source"
SINK_SIDE = "sink"

_MAX_SCALE_BITS = 32
_CAP_BUDGET_BITS = 60


class InfeasibleError(ValueError):
    """Hard constraints conflict (sentinel-capacity saturation) or the
    requested volume is unreachable."""


@dataclass
class CutProblem:
    """Node-level cut encoding of a binary energy.

    ``cost_L`` / ``cost_V`` may contain ``inf`` for hard constraints.
    ``vol_weight`` is the liquid volume carried by each node (uniform).
    """

    num_nodes: int
    pair_u: np.ndarray
    pair_v: np.ndarray
    pair_w: np.ndarray
    cost_L: np.ndarray
    cost_V: np.ndarray
    vol_weight: float = 1.0
    boundary_policy: str = "free"
    domain: object = None
    cell_index: Optional[np.ndarray] = None
    _adj: Optional[tuple] = field(default=None, repr=False)

    def energy_of(self, labels: np.ndarray, lam: float = 0.0) -> float:
        """Cut value (= lattice energy) of a labeling, in real units."""
        labels = np.asarray(labels, dtype=bool)
        cl = np.where(np.isinf(self.cost_L), 0.0, self.cost_L)
        cv = np.where(np.isinf(self.cost_V), 0.0, self.cost_V)
        if np.any(np.isinf(self.cost_V) & ~labels) \
           or np.any(np.isinf(self.cost_L) & labels):
            return np.inf
        e = float(cl[labels].sum() + cv[~labels].sum())
        cut = labels[self.pair_u] != labels[self.pair_v]
        e += float(self.pair_w[cut].sum())
        return e - lam * self.vol_weight * int(labels.sum())

    def volume_of(self, labels: np.ndarray) -> float:
        return self.vol_weight * int(np.count_nonzero(labels))

    def neighbor_lists(self):
        """CSR adjacency over the pair edges (both directions), cached."""
        if self._adj is None:
            u = np.concatenate([self.pair_u, self.pair_v])
            v = np.concatenate([self.pair_v, self.pair_u])
            w = np.concatenate([self.pair_w, self.pair_w])
            order = np.argsort(u, kind="stable")
            u, v, w = u[order], v[order], w[order]
            start = np.searchsorted(u, np.arange(self.num_nodes + 1))
            self._adj = (start, v, w)
        return self._adj


@dataclass
class CutSolution:
    labels: np.ndarray            # per-node bool, True = Liquid
    flow_value: float             # descaled min of E - lam * volume
    scale: int
    side_choice: str
    lam: float = 0.0
    labeling: object = None       # LabelField when the problem has a domain
    lambda_bracket: Optional[tuple] = None

    def volume(self, problem: CutProblem) -> float:
        return problem.volume_of(self.labels)


def _assemble(problem: CutProblem, lam: float):
    """Build integer arc arrays for one solve.  Returns
    (n_total, s, t, start, adj, to, cap, scale, const, sentinel)."""
    n = problem.num_nodes
    cl = problem.cost_L - lam * problem.vol_weight
    cv = problem.cost_V.astype(float)
    both = np.minimum(np.where(np.isinf(cl), cv, cl),
                      np.where(np.isinf(cv), cl, cv))
    both = np.where(np.isinf(both), 0.0, both)
    s_cap = np.where(np.isinf(cv), np.inf, cv - both)
    t_cap = np.where(np.isinf(cl), np.inf, cl - both)
    const = float(both.sum())

    fin_sum = float(problem.pair_w.sum() * 2
                    + s_cap[np.isfinite(s_cap)].sum()
                    + t_cap[np.isfinite(t_cap)].sum())
    scale = 1 << _MAX_SCALE_BITS
    while fin_sum * scale >= (1 << _CAP_BUDGET_BITS) and scale > 1:
        scale >>= 1

    def to_int(x):
        return np.rint(np.where(np.isfinite(x), x, 0.0) * scale).astype(
            np.int64)

    pw = np.rint(problem.pair_w * scale).astype(np.int64)
    si = to_int(s_cap)
    ti = to_int(t_cap)
    sentinel = int(pw.sum() * 2 + si.sum() + ti.sum()) + 1
    si[np.isinf(s_cap)] = sentinel
    ti[np.isinf(t_cap)] = sentinel

    s_node, t_node = n, n + 1
    m_pairs = problem.pair_u.size
    keep_s = np.flatnonzero(si > 0)
    keep_t = np.flatnonzero(ti > 0)
    n_arcs = 2 * m_pairs + 2 * keep_s.size + 2 * keep_t.size
    to = np.empty(n_arcs, dtype=np.int64)
    cap = np.empty(n_arcs, dtype=np.int64)
    tail = np.empty(n_arcs, dtype=np.int64)
    # pair arcs (symmetric)
    to[0:2 * m_pairs:2] = problem.pair_v
    to[1:2 * m_pairs:2] = problem.pair_u
    tail[0:2 * m_pairs:2] = problem.pair_u
    tail[1:2 * m_pairs:2] = problem.pair_v
    cap[0:2 * m_pairs:2] = pw
    cap[1:2 * m_pairs:2] = pw
    # source arcs
    o = 2 * m_pairs
    ks = keep_s.size
    to[o:o + 2 * ks:2] = keep_s
    to[o + 1:o + 2 * ks:2] = s_node
    tail[o:o + 2 * ks:2] = s_node
    tail[o + 1:o + 2 * ks:2] = keep_s
    cap[o:o + 2 * ks:2] = si[keep_s]
    cap[o + 1:o + 2 * ks:2] = 0
    # sink arcs
    o += 2 * ks
    kt = keep_t.size
    to[o:o + 2 * kt:2] = t_node
    to[o + 1:o + 2 * kt:2] = keep_t
    tail[o:o + 2 * kt:2] = keep_t
    tail[o + 1:o + 2 * kt:2] = t_node
    cap[o:o + 2 * kt:2] = ti[keep_t]
    cap[o + 1:o + 2 * kt:2] = 0

    n_total = n + 2
    order = np.argsort(tail, kind="stable").astype(np.int64)
    start = np.searchsorted(tail[order], np.arange(n_total + 1)).astype(
        np.int64)
    return n_total, s_node, t_node, start, order, to, cap, scale, const, \
        sentinel


def _reachable_from_source(n_total, s, start, adj, to, cap):
    seen = np.zeros(n_total, dtype=bool)
    seen[s] = True
    dq = deque([s])
    while dq:
        u = dq.popleft()
        for p in range(start[u], start[u + 1]):
            a = adj[p]
            if cap[a] > 0 and not seen[to[a]]:
                seen[to[a]] = True
                dq.append(to[a])
    return seen


def _reaching_sink(n_total, t, start, adj, to, cap):
    seen = np.zeros(n_total, dtype=bool)
    seen[t] = True
    dq = deque([t])
    while dq:
        x = dq.popleft()
        for p in range(start[x], start[x + 1]):
            a = adj[p]          # arc x -> u; its reverse u -> x is a ^ 1
            u = to[a]
            if cap[a ^ 1] > 0 and not seen[u]:
                seen[u] = True
                dq.append(u)
    return seen


def solve(problem: CutProblem, side_choice: str = SINK_SIDE,
          lam: float = 0.0) -> CutSolution:
    """Exact global minimizer of the encoded energy minus ``lam * volume``."""
    (n_total, s, t, start, adj, to, cap, scale, const,
     sentinel) = _assemble(problem, lam)
    flow = _kernel.max_flow(n_total, s, t, start, adj, to, cap)
    if flow >= sentinel:
        raise InfeasibleError("hard label constraints are contradictory")
    if side_choice == SOURCE_SIDE:
        labels = _reachable_from_source(n_total, s, start, adj, to, cap)[
            :problem.num_nodes]
    elif side_choice == SINK_SIDE:
        labels = ~_reaching_sink(n_total, t, start, adj, to, cap)[
            :problem.num_nodes]
    else:
        raise ValueError(f"unknown side_choice {side_choice!r}")
    sol = CutSolution(labels=labels, flow_value=flow / scale + const,
                      scale=scale, side_choice=side_choice, lam=lam)
    if problem.domain is not None:
        from .lattice import field_from_labels
        sol.labeling = field_from_labels(problem.domain, labels,
                                         problem.cell_index)
    return sol


def _toggle_deltas(problem: CutProblem, labels: np.ndarray, nodes, lam):
    """Energy change of flipping each node in ``nodes`` (current labels)."""
    start, nbr, w = problem.neighbor_lists()
    cl = problem.cost_L
    cv = problem.cost_V
    out = {}
    for i in nodes:
        sgn = -1.0 if labels[i] else 1.0
        base = (cl[i] - cv[i] - lam * problem.vol_weight) * sgn
        sw = w[start[i]:start[i + 1]]
        same = labels[nbr[start[i]:start[i + 1]]] == labels[i]
        base += float(sw[same].sum() - sw[~same].sum())
        out[i] = base
    return out


def solve_volume_constrained(problem: CutProblem, target_volume: float,
                             tol_cells: int = 0,
                             max_iters: int = 80) -> CutSolution:
    """Volume-constrained exact minimization via the parametric multiplier.

    Bisects the uniform per-cell liquid reward ``lam`` (volume is
    nondecreasing in lam -- asserted) until a maximal minimizer hits the
    target within ``tol_cells`` cells; plateaus are closed by greedily
    toggling lowest-marginal-cost cells adjacent to the liquid-vapor
    interface, after which the reported energy is re-evaluated exactly.
    """
    vcell = problem.vol_weight
    total_capacity = problem.num_nodes * vcell
    if not 0 < target_volume < total_capacity + 0.5 * vcell:
        raise InfeasibleError("target volume outside the non-solid capacity")
    target_cells = int(round(target_volume / vcell))
    tol_vol = (tol_cells + 0.5) * vcell

    evals: list[tuple[float, float]] = []

    def vol_at(lam):
        sol = solve(problem, SINK_SIDE, lam)
        v = sol.volume(problem)
        for lam0, v0 in evals:
            if (lam - lam0) * (v - v0) < 0:
                raise AssertionError(
                    "parametric volume monotonicity violated")
        evals.append((lam, v))
        return sol, v

    lam_lo = lam_hi = 0.0
    sol_lo, v_lo = vol_at(0.0)
    sol_hi, v_hi = sol_lo, v_lo
    best = None
    if abs(v_lo - target_volume) <= tol_vol:
        best = sol_lo
    elif v_lo > target_volume:
        step = -1.0
        while v_lo > target_volume:
            lam_hi, sol_hi, v_hi = lam_lo, sol_lo, v_lo
            lam_lo = step
            sol_lo, v_lo = vol_at(lam_lo)
            step *= 2
            if step < -1e12:
                raise InfeasibleError("volume bracket failure (low side)")
    else:
        step = 1.0
        while v_hi < target_volume:
            lam_lo, sol_lo, v_lo = lam_hi, sol_hi, v_hi
            lam_hi = lam_hi + step
            sol_hi, v_hi = vol_at(lam_hi)
            step *= 2
            if lam_hi > 1e12:
                raise InfeasibleError("volume bracket failure (high side)")

    if best is None:
        for _ in range(max_iters):
            if abs(v_lo - target_volume) <= tol_vol:
                best = sol_lo
                break
            if abs(v_hi - target_volume) <= tol_vol:
                best = sol_hi
                break
            mid = 0.5 * (lam_lo + lam_hi)
            if mid in (lam_lo, lam_hi):
                break
            sol_m, v_m = vol_at(mid)
            if v_m <= target_volume:
                lam_lo, sol_lo, v_lo = mid, sol_m, v_m
            else:
                lam_hi, sol_hi, v_hi = mid, sol_m, v_m

    if best is not None:
        best.lambda_bracket = (lam_lo, lam_hi)
        return best

    # plateau: grow the under-target maximal minimizer greedily
    labels = sol_lo.labels.copy()
    start, nbr, w = problem.neighbor_lists()
    deficit = target_cells - int(labels.sum())
    guard = 0
    while deficit != 0:
        guard += 1
        if guard > problem.num_nodes + 10:
            raise InfeasibleError("volume fix-up failed to converge")
        grow = deficit > 0
        cand = set()
        for i in np.flatnonzero(labels != grow):
            lo, hi = start[i], start[i + 1]
            if np.any(labels[nbr[lo:hi]] == grow):
                cand.add(int(i))
        if not cand:
            cand = set(int(i) for i in np.flatnonzero(labels != grow))
        if not cand:
            raise InfeasibleError("volume target unreachable")
        deltas = _toggle_deltas(problem, labels, cand, lam_lo)
        heap = [(d, i) for i, d in deltas.items() if np.isfinite(d)]
        heapq.heapify(heap)
        while heap and deficit != 0:
            d, i = heapq.heappop(heap)
            cur = _toggle_deltas(problem, labels, [i], lam_lo)[i]
            if cur > d + 1e-15:
                heapq.heappush(heap, (cur, i))
                continue
            labels[i] = grow
            deficit += -1 if grow else 1

    sol = CutSolution(labels=labels,
                      flow_value=problem.energy_of(labels, lam=0.0),
                      scale=sol_lo.scale, side_choice=SINK_SIDE,
                      lam=lam_lo, lambda_bracket=(lam_lo, lam_hi))
    if problem.domain is not None:
        from .lattice import field_from_labels
        sol.labeling = field_from_labels(problem.domain, labels,
                                         problem.cell_index)
    return sol


def dump_dimacs(problem: CutProblem, path, lam: float = 0.0) -> None:
    """Write the scaled integer instance in DIMACS max-flow format."""
    (n_total, s, t, start, adj, to, cap, scale, const,
     sentinel) = _assemble(problem, lam)
    tails = np.empty_like(to)
    for u in range(n_total):
        tails[adj[start[u]:start[u + 1]]] = u
    with open(path, "w") as fh:
        fh.write(f"c capdrop cut problem, scale={scale}, const={const!r}\n")
        fh.write(f"p max {n_total} {int(np.count_nonzero(cap > 0))}\n")
        fh.write(f"n {s + 1} s\n")
        fh.write(f"n {t + 1} t\n")
        for a in range(cap.size):
            if cap[a] > 0:
                fh.write(f"a {tails[a] + 1} {to[a] + 1} {int(cap[a])}\n")
