"""Jitted inner loops for the heat-bath sweeps.

Raster order throughout; each site consumes the uniform at its own index, so
a trajectory is a pure function of (initial state, uniform stream).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


_DIAG = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=np.int64)


@njit(cache=True, nogil=True)
def height_sweep(h, fx, fy, cfac, sfac, u):
    """One raster heat-bath sweep over the listed faces of the height grid.

    cfac[i, k] multiplies when the candidate equals the k-th diagonal height
    (c or c_b), sfac[i, k] when it differs (a, b, or 1 on boundary vertices).
    """
    n = fx.shape[0]
    for i in range(n):
        x = fx[i]
        y = fy[i]
        n1 = h[x + 1, y]
        n2 = h[x - 1, y]
        n3 = h[x, y + 1]
        n4 = h[x, y - 1]
        lo = min(min(n1, n2), min(n3, n4))
        hi = max(max(n1, n2), max(n3, n4))
        if lo != hi:
            h[x, y] = (lo + hi) // 2
            continue
        w_lo = 1.0
        w_hi = 1.0
        for k in range(4):
            d = h[x + _DIAG[k, 0], y + _DIAG[k, 1]]
            if lo + 1 == d:
                w_hi *= cfac[i, k]
            else:
                w_hi *= sfac[i, k]
            if lo - 1 == d:
                w_lo *= cfac[i, k]
            else:
                w_lo *= sfac[i, k]
        p_hi = w_hi / (w_hi + w_lo)
        if u[i] < p_hi:
            h[x, y] = lo + 1
        else:
            h[x, y] = lo - 1


@njit(cache=True, nogil=True)
def rc_sweep(bits, eu, ev, adj_ptr, adj_edge, adj_node, is_bnd, p_edge, q, qb, u,
             stamp, stamp_no, queue):
    """One raster heat-bath sweep over the edges of a random-cluster config.

    For each edge, a BFS avoiding that edge decides whether its endpoints are
    already connected and whether each side touches the boundary.
    """
    m = eu.shape[0]
    for e in range(m):
        a = eu[e]
        b = ev[e]
        # BFS from a, skipping edge e
        stamp_no += 1
        qh = 0
        qt = 0
        queue[qt] = a
        qt += 1
        stamp[a] = stamp_no
        connected = False
        side_a_bnd = False
        while qh < qt:
            v = queue[qh]
            qh += 1
            if is_bnd[v]:
                side_a_bnd = True
            if v == b:
                connected = True
            for j in range(adj_ptr[v], adj_ptr[v + 1]):
                k = adj_edge[j]
                if k == e or bits[k] == 0:
                    continue
                w = adj_node[j]
                if stamp[w] != stamp_no:
                    stamp[w] = stamp_no
                    queue[qt] = w
                    qt += 1
        if connected:
            gamma = 1.0
        else:
            stamp_no += 1
            qh = 0
            qt = 0
            queue[qt] = b
            qt += 1
            stamp[b] = stamp_no
            side_b_bnd = False
            while qh < qt:
                v = queue[qh]
                qh += 1
                if is_bnd[v]:
                    side_b_bnd = True
                for j in range(adj_ptr[v], adj_ptr[v + 1]):
                    k = adj_edge[j]
                    if k == e or bits[k] == 0:
                        continue
                    w = adj_node[j]
                    if stamp[w] != stamp_no:
                        stamp[w] = stamp_no
                        queue[qt] = w
                        qt += 1
            gamma = qb if (side_a_bnd and side_b_bnd) else q
        p = p_edge[e]
        p_open = p / (p + (1.0 - p) * gamma)
        bits[e] = 1 if u[e] < p_open else 0
    return stamp_no


@njit(cache=True, nogil=True)
def eta_given_heights(hp, hd, eu, ev, edu, edv, g_open, g_closed, s, u, out):
    """Sample the per-edge conditional of eta given node heights.

    hp/hd are heights on the primal/dual graph nodes; forced edges follow the
    splits, free edges open with odds g_open * s^m : g_closed * s^{-m}.
    """
    m = eu.shape[0]
    for e in range(m):
        a = hp[eu[e]]
        b = hp[ev[e]]
        if a != b:
            out[e] = 0
            continue
        da = hd[edu[e]]
        db = hd[edv[e]]
        if da != db:
            out[e] = 1
            continue
        sm = s ** (da - a)
        w_open = g_open[e] * sm
        w_closed = g_closed[e] / sm
        out[e] = 1 if u[e] * (w_open + w_closed) < w_open else 0
