"""Dinic max-flow on a CSR arc list with float capacities (numba kernels)."""
from __future__ import annotations

import numpy as np
from numba import njit


def build_csr(tails, heads, caps_fwd, caps_bwd, n_nodes):
    """Pack arc pairs into CSR order.

    Pair ``i`` becomes arc ``tails[i] -> heads[i]`` with capacity
    ``caps_fwd[i]`` and its reverse with ``caps_bwd[i]``.
    Returns ``(start, head, cap, rev)``.
    """
    m = len(tails)
    tail_all = np.empty(2 * m, np.int64)
    head_all = np.empty(2 * m, np.int64)
    cap_all = np.empty(2 * m, np.float64)
    tail_all[0::2], tail_all[1::2] = tails, heads
    head_all[0::2], head_all[1::2] = heads, tails
    cap_all[0::2], cap_all[1::2] = caps_fwd, caps_bwd
    order = np.argsort(tail_all, kind="stable")
    pos = np.empty(2 * m, np.int64)
    pos[order] = np.arange(2 * m)
    partner = np.arange(2 * m) ^ 1
    rev = pos[partner][order]
    start = np.zeros(n_nodes + 1, np.int64)
    np.add.at(start, tail_all + 1, 1)
    np.cumsum(start, out=start)
    return start, head_all[order].copy(), cap_all[order].copy(), rev


@njit(cache=True, nogil=True)
def dinic(start, head, cap, rev, s, t, eps):
    """Max flow from ``s`` to ``t``; ``cap`` is overwritten with residuals.

    Arcs with residual ``<= eps`` count as saturated. Returns
    ``(flow, phases)``.
    """
    n = start.shape[0] - 1
    level = np.empty(n, np.int64)
    cur = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    path = np.empty(n, np.int64)
    total = 0.0
    phases = 0
    while True:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        queue[0] = s
        qh, qt = 0, 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            if level[t] >= 0 and level[u] >= level[t]:
                break
            for e in range(start[u], start[u + 1]):
                v = head[e]
                if cap[e] > eps and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
        if level[t] < 0:
            break
        phases += 1
        for i in range(n):
            cur[i] = start[i]
        depth = 0
        u = s
        while True:
            if u == t:
                f = np.inf
                for i in range(depth):
                    if cap[path[i]] < f:
                        f = cap[path[i]]
                for i in range(depth):
                    e = path[i]
                    cap[e] -= f
                    cap[rev[e]] += f
                total += f
                k = 0
                for i in range(depth):
                    if cap[path[i]] <= eps:
                        k = i
                        break
                depth = k
                u = s if k == 0 else head[path[k - 1]]
                continue
            advanced = False
            while cur[u] < start[u + 1]:
                e = cur[u]
                v = head[e]
                if cap[e] > eps and level[v] == level[u] + 1:
                    path[depth] = e
                    depth += 1
                    u = v
                    advanced = True
                    break
                cur[u] += 1
            if not advanced:
                if u == s:
                    break
                level[u] = -1
                depth -= 1
                e = path[depth]
                u = head[rev[e]]
                cur[u] += 1
    return total, phases


@njit(cache=True, nogil=True)
def reachable(start, head, cap, s, eps):
    """Nodes reachable from ``s`` through arcs with residual ``> eps``."""
    n = start.shape[0] - 1
    seen = np.zeros(n, np.bool_)
    stack = np.empty(n, np.int64)
    seen[s] = True
    stack[0] = s
    top = 1
    while top > 0:
        top -= 1
        u = stack[top]
        for e in range(start[u], start[u + 1]):
            v = head[e]
            if cap[e] > eps and not seen[v]:
                seen[v] = True
                stack[top] = v
                top += 1
    return seen
