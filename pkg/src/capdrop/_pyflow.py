"""Pure-Python max-flow kernel (Dinic's algorithm on arc arrays).

Reference implementation and fallback when the compiled kernel is not
available.  Same contract as ``_fastflow.max_flow``: arcs are stored as
paired directed edges (arc ``k`` and its reverse ``k ^ 1``), adjacency is
CSR by tail node, and ``cap`` is mutated in place to the residual
capacities.  Deterministic: arcs are scanned in CSR order.
"""

from __future__ import annotations

from collections import deque

import numpy as np


def max_flow(n: int, s: int, t: int, start: np.ndarray, adj: np.ndarray,
             to: np.ndarray, cap: np.ndarray) -> int:
    start_l = start.tolist()
    adj_l = adj.tolist()
    to_l = to.tolist()
    cap_l = cap.tolist()
    total = 0
    while True:
        level = [-1] * n
        level[s] = 0
        dq = deque([s])
        while dq:
            u = dq.popleft()
            lu = level[u]
            for p in range(start_l[u], start_l[u + 1]):
                a = adj_l[p]
                if cap_l[a] > 0:
                    v = to_l[a]
                    if level[v] < 0:
                        level[v] = lu + 1
                        dq.append(v)
        if level[t] < 0:
            break
        it = list(start_l[:n])
        nodes = [s]
        arcs = []
        while nodes:
            u = nodes[-1]
            if u == t:
                f = min(cap_l[a] for a in arcs)
                total += f
                cut = 0
                for i, a in enumerate(arcs):
                    cap_l[a] -= f
                    cap_l[a ^ 1] += f
                for i, a in enumerate(arcs):
                    if cap_l[a] == 0:
                        cut = i
                        break
                del nodes[cut + 1:]
                del arcs[cut:]
                continue
            advanced = False
            p = it[u]
            end = start_l[u + 1]
            lu1 = level[u] + 1
            while p < end:
                a = adj_l[p]
                if cap_l[a] > 0 and level[to_l[a]] == lu1:
                    it[u] = p
                    nodes.append(to_l[a])
                    arcs.append(a)
                    advanced = True
                    break
                p += 1
            if not advanced:
                it[u] = p
                level[u] = -1
                nodes.pop()
                if arcs:
                    arcs.pop()
    cap[:] = cap_l
    return total
