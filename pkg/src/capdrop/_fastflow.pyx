# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled max-flow kernel (Dinic's algorithm on arc arrays).

Same contract as the pure-Python fallback ``_pyflow.max_flow``: paired
directed arcs (k and k ^ 1 are reverses), CSR adjacency by tail node,
``cap`` mutated in place to residual capacities, deterministic arc order.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def max_flow(int n, int s, int t,
             cnp.int64_t[::1] start, cnp.int64_t[::1] adj,
             cnp.int64_t[::1] to, cnp.int64_t[::1] cap):
    cdef cnp.int64_t total = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=1] level_a = np.empty(n, np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queue_a = np.empty(n, np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] it_a = np.empty(n, np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] nstack_a = np.empty(n + 1, np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] astack_a = np.empty(n + 1, np.int64)
    cdef cnp.int64_t[::1] level = level_a
    cdef cnp.int64_t[::1] queue = queue_a
    cdef cnp.int64_t[::1] it = it_a
    cdef cnp.int64_t[::1] nstack = nstack_a
    cdef cnp.int64_t[::1] astack = astack_a
    cdef Py_ssize_t qh, qt, p, end, depth, i, cut
    cdef cnp.int64_t u, v, a, f, lu1

    while True:
        # BFS level graph
        for i in range(n):
            level[i] = -1
        level[s] = 0
        queue[0] = s
        qh = 0
        qt = 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            lu1 = level[u] + 1
            p = start[u]
            end = start[u + 1]
            while p < end:
                a = adj[p]
                if cap[a] > 0:
                    v = to[a]
                    if level[v] < 0:
                        level[v] = lu1
                        queue[qt] = v
                        qt += 1
                p += 1
        if level[t] < 0:
            break
        for i in range(n):
            it[i] = start[i]
        # blocking flow by iterative DFS
        nstack[0] = s
        depth = 0
        while depth >= 0:
            u = nstack[depth]
            if u == t:
                f = cap[astack[0]]
                for i in range(1, depth):
                    if cap[astack[i]] < f:
                        f = cap[astack[i]]
                total += f
                cut = 0
                for i in range(depth):
                    a = astack[i]
                    cap[a] -= f
                    cap[a ^ 1] += f
                for i in range(depth):
                    if cap[astack[i]] == 0:
                        cut = i
                        break
                depth = cut
                continue
            lu1 = level[u] + 1
            p = it[u]
            end = start[u + 1]
            while p < end:
                a = adj[p]
                if cap[a] > 0 and level[to[a]] == lu1:
                    break
                p += 1
            it[u] = p
            if p < end:
                a = adj[p]
                astack[depth] = a
                depth += 1
                nstack[depth] = to[a]
            else:
                level[u] = -1
                depth -= 1
    return int(total)
