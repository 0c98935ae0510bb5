"""
Hot loops. Each function compiles with numba unless ``WASSKNN_DISABLE_JIT``
is set, in which case the identical source runs as plain Python.
"""

import numpy as np

from ._jit import njit

# --------------------------------------------------------------------------
# exact transport: transportation simplex (MODI pricing, Dantzig rule)
# --------------------------------------------------------------------------


@njit(cache=True)
def _northwest_corner(a, b, bi, bj, bx):
    m = a.shape[0]
    n = b.shape[0]
    ra = a.copy()
    rb = b.copy()
    i = 0
    j = 0
    for k in range(m + n - 1):
        x = min(ra[i], rb[j])
        if x < 0.0:
            x = 0.0
        bi[k] = i
        bj[k] = j
        bx[k] = x
        ra[i] -= x
        rb[j] -= x
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1


@njit(cache=True)
def _tree(m, n, bi, bj, C, u, v, parent_edge, depth, order):
    """Root the basis tree at row 0; fill potentials, parents and depths."""
    nn = m + n
    nb = bi.shape[0]
    deg = np.zeros(nn + 1, np.int64)
    for e in range(nb):
        deg[bi[e] + 1] += 1
        deg[m + bj[e] + 1] += 1
    for t in range(nn):
        deg[t + 1] += deg[t]
    fill = deg[:nn].copy()
    adj = np.empty(2 * nb, np.int64)
    for e in range(nb):
        r = bi[e]
        c = m + bj[e]
        adj[fill[r]] = e
        fill[r] += 1
        adj[fill[c]] = e
        fill[c] += 1

    for t in range(nn):
        parent_edge[t] = -2
    parent_edge[0] = -1
    depth[0] = 0
    u[0] = 0.0
    order[0] = 0
    head = 0
    tail = 1
    while head < tail:
        node = order[head]
        head += 1
        for s in range(deg[node], deg[node + 1]):
            e = adj[s]
            other = m + bj[e] if node < m else bi[e]
            if parent_edge[other] != -2:
                continue
            parent_edge[other] = e
            depth[other] = depth[node] + 1
            if node < m:
                v[bj[e]] = C[bi[e], bj[e]] - u[bi[e]]
            else:
                u[bi[e]] = C[bi[e], bj[e]] - v[bj[e]]
            order[tail] = other
            tail += 1
    return tail


@njit(cache=True)
def transport_simplex(a, b, C, tol, max_iter):
    """Optimal vertex of the transportation polytope.

    Returns ``(bi, bj, bx, u, v, status, iterations)``; the basis cells
    ``(bi[k], bj[k])`` carry flows ``bx[k]`` and ``u, v`` are the dual
    potentials. ``status`` is 0 on optimality, 1 on iteration cap, 2 if the
    basis stopped being a spanning tree.
    """
    m = a.shape[0]
    n = b.shape[0]
    nb = m + n - 1
    nn = m + n
    bi = np.empty(nb, np.int64)
    bj = np.empty(nb, np.int64)
    bx = np.empty(nb)
    _northwest_corner(a, b, bi, bj, bx)

    u = np.zeros(m)
    v = np.zeros(n)
    parent_edge = np.empty(nn, np.int64)
    depth = np.empty(nn, np.int64)
    order = np.empty(nn, np.int64)
    path = np.empty(nn, np.int64)
    back = np.empty(nn, np.int64)
    status = 1
    it = 0
    while it < max_iter:
        reached = _tree(m, n, bi, bj, C, u, v, parent_edge, depth, order)
        if reached != nn:
            status = 2
            break

        best = -tol
        p = -1
        q = -1
        for i in range(m):
            ui = u[i]
            for j in range(n):
                rc = C[i, j] - ui - v[j]
                if rc < best:
                    best = rc
                    p = i
                    q = j
        if p < 0:
            status = 0
            break

        # tree path col q -> row p; path edges alternate -, +, ..., -
        x = m + q
        y = p
        nq = 0
        tail_len = 0
        while depth[x] > depth[y]:
            e = parent_edge[x]
            path[nq] = e
            nq += 1
            x = bi[e] if x >= m else m + bj[e]
        while depth[y] > depth[x]:
            e = parent_edge[y]
            back[tail_len] = e
            tail_len += 1
            y = bi[e] if y >= m else m + bj[e]
        while x != y:
            e = parent_edge[x]
            path[nq] = e
            nq += 1
            x = bi[e] if x >= m else m + bj[e]
            e = parent_edge[y]
            back[tail_len] = e
            tail_len += 1
            y = bi[e] if y >= m else m + bj[e]
        for s in range(tail_len - 1, -1, -1):
            path[nq] = back[s]
            nq += 1

        theta = np.inf
        leave = -1
        for s in range(0, nq, 2):
            e = path[s]
            if bx[e] < theta:
                theta = bx[e]
                leave = e
        for s in range(nq):
            e = path[s]
            if s % 2 == 0:
                bx[e] -= theta
            else:
                bx[e] += theta
        bi[leave] = p
        bj[leave] = q
        bx[leave] = theta
        it += 1

    for k in range(nb):
        if bx[k] < 0.0:
            bx[k] = 0.0
    return bi, bj, bx, u, v, status, it


# --------------------------------------------------------------------------
# 1D quantile integral
# --------------------------------------------------------------------------


@njit(cache=True)
def quantile_lp(ends1, vals1, ends2, vals2, p):
    """Exact integral over [0,1) of |f1 - f2|**p for two step functions
    given by right endpoints (last one equal to 1) and values."""
    i = 0
    j = 0
    prev = 0.0
    acc = 0.0
    n1 = ends1.shape[0]
    n2 = ends2.shape[0]
    while i < n1 and j < n2:
        e = min(ends1[i], ends2[j])
        if e > prev:
            acc += (e - prev) * abs(vals1[i] - vals2[j]) ** p
            prev = e
        if ends1[i] <= e:
            i += 1
        if ends2[j] <= e:
            j += 1
    return acc


# --------------------------------------------------------------------------
# k-NN
# --------------------------------------------------------------------------


@njit(cache=True)
def knn_select(dist, k):
    """Indices of the k nearest entries, ties broken by smaller index."""
    return np.argsort(dist, kind="mergesort")[:k]


@njit(cache=True)
def knn_predict_rows(D, labels, k):
    """Majority vote (ties -> 1) of the k nearest training labels, per row of D."""
    out = np.empty(D.shape[0], np.int64)
    for r in range(D.shape[0]):
        idx = np.argsort(D[r], kind="mergesort")[:k]
        ones = 0
        for s in range(k):
            ones += labels[idx[s]]
        out[r] = 1 if 2 * ones >= k else 0
    return out


# --------------------------------------------------------------------------
# disconnected families through a common point
# --------------------------------------------------------------------------


@njit(cache=True)
def greedy_disconnected_sizes(cand):
    """For each trial, greedily grow a disconnected family of closed balls
    that all contain the origin.

    ``cand`` has shape (trials, K, d): candidate centers, each with radius
    equal to its norm (the smallest radius reaching the origin). A candidate
    ``c`` is kept when ``|c - a| > max(|c|, |a|)`` against every kept center.
    Returns the family size per trial.
    """
    T = cand.shape[0]
    K = cand.shape[1]
    d = cand.shape[2]
    sizes = np.zeros(T, np.int64)
    kept = np.empty(K, np.int64)
    for t in range(T):
        nk = 0
        for c in range(K):
            rc = 0.0
            for s in range(d):
                rc += cand[t, c, s] ** 2
            ok = rc > 0.0
            a = 0
            while ok and a < nk:
                ka = kept[a]
                ra = 0.0
                dd = 0.0
                for s in range(d):
                    ra += cand[t, ka, s] ** 2
                    dd += (cand[t, c, s] - cand[t, ka, s]) ** 2
                if not dd > max(rc, ra):
                    ok = False
                a += 1
            if ok:
                kept[nk] = c
                nk += 1
        sizes[t] = nk
    return sizes
