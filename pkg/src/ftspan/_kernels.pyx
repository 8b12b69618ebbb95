# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled kernels: path-greedy spanner, CSR Dijkstra, worst-stretch audit.

Mirrors ``_kernels_py`` exactly: same algorithms, same tie-breaking, same
float arithmetic order, so outputs are identical between backends.
"""

from libcpp.vector cimport vector

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

cdef double INF = float("inf")


# Binary heap over (key, node), compared lexicographically like Python's
# (float, int) tuples in heapq.

cdef inline bint _lt(double ka, int va, double kb, int vb) noexcept nogil:
    return ka < kb or (ka == kb and va < vb)


cdef inline void heap_push(vector[double]& hk, vector[int]& hv,
                           double key, int node) noexcept nogil:
    cdef size_t i = hk.size()
    cdef size_t p
    hk.push_back(key)
    hv.push_back(node)
    while i > 0:
        p = (i - 1) >> 1
        if not _lt(key, node, hk[p], hv[p]):
            break
        hk[i] = hk[p]
        hv[i] = hv[p]
        i = p
    hk[i] = key
    hv[i] = node


cdef inline void heap_pop(vector[double]& hk, vector[int]& hv,
                          double* key, int* node) noexcept nogil:
    key[0] = hk[0]
    node[0] = hv[0]
    cdef double lk = hk[hk.size() - 1]
    cdef int ln = hv[hv.size() - 1]
    hk.pop_back()
    hv.pop_back()
    cdef size_t sz = hk.size()
    if sz == 0:
        return
    cdef size_t i = 0
    cdef size_t c
    while True:
        c = 2 * i + 1
        if c >= sz:
            break
        if c + 1 < sz and _lt(hk[c + 1], hv[c + 1], hk[c], hv[c]):
            c += 1
        if _lt(hk[c], hv[c], lk, ln):
            hk[i] = hk[c]
            hv[i] = hv[c]
            i = c
        else:
            break
    hk[i] = lk
    hv[i] = ln


def greedy_spanner(n_, pu, pv, pd, double t):
    """Path-greedy spanner over pre-sorted candidate pairs (see _kernels_py)."""
    cdef int n = int(n_)
    cdef cnp.int32_t[::1] U = np.ascontiguousarray(pu, dtype=np.int32)
    cdef cnp.int32_t[::1] V = np.ascontiguousarray(pv, dtype=np.int32)
    cdef double[::1] D = np.ascontiguousarray(pd, dtype=np.float64)
    cdef Py_ssize_t m = D.shape[0]

    cache_arr = np.full((n, n), INF)
    np.fill_diagonal(cache_arr, 0.0)
    cdef double[:, ::1] C = cache_arr

    cdef vector[vector[int]] adj_v = vector[vector[int]](n)
    cdef vector[vector[double]] adj_w = vector[vector[double]](n)
    cdef vector[int] out_u, out_v

    dist_arr = np.zeros(n)
    stamp_arr = np.full(n, -1, dtype=np.int64)
    set_arr = np.full(n, -1, dtype=np.int64)
    cdef double[::1] dist = dist_arr
    cdef long long[::1] stamp = stamp_arr
    cdef long long[::1] setst = set_arr

    cdef vector[double] hk
    cdef vector[int] hv

    cdef Py_ssize_t k
    cdef int u, v, x, y
    cdef double d, bound, dk, nd, w
    cdef long long epoch = 0
    cdef size_t e

    with nogil:
        for k in range(m):
            u = U[k]
            v = V[k]
            d = D[k]
            bound = t * d
            if C[u, v] <= bound:
                continue
            # bounded Dijkstra from u over the current spanner
            epoch += 1
            hk.clear()
            hv.clear()
            dist[u] = 0.0
            stamp[u] = epoch
            heap_push(hk, hv, 0.0, u)
            while hk.size() > 0:
                heap_pop(hk, hv, &dk, &x)
                if setst[x] == epoch:
                    continue
                if dk > bound:
                    break
                setst[x] = epoch
                if dk < C[u, x]:
                    C[u, x] = dk
                    C[x, u] = dk
                for e in range(adj_v[x].size()):
                    y = adj_v[x][e]
                    w = adj_w[x][e]
                    nd = dk + w
                    if nd <= bound and (stamp[y] != epoch or nd < dist[y]):
                        dist[y] = nd
                        stamp[y] = epoch
                        heap_push(hk, hv, nd, y)
            if C[u, v] <= bound:
                continue
            adj_v[u].push_back(v)
            adj_w[u].push_back(d)
            adj_v[v].push_back(u)
            adj_w[v].push_back(d)
            out_u.push_back(u)
            out_v.push_back(v)
            if d < C[u, v]:
                C[u, v] = d
                C[v, u] = d

    eu = np.empty(out_u.size(), dtype=np.int32)
    ev = np.empty(out_v.size(), dtype=np.int32)
    cdef cnp.int32_t[::1] eu_v = eu
    cdef cnp.int32_t[::1] ev_v = ev
    for k in range(<Py_ssize_t>out_u.size()):
        eu_v[k] = out_u[k]
        ev_v[k] = out_v[k]
    return eu, ev


cdef void _sssp_core(long long[::1] indptr, cnp.int32_t[::1] nbrs,
                     double[::1] wts, int n, int source,
                     cnp.uint8_t[::1] blocked, double[::1] dist,
                     cnp.uint8_t[::1] settled,
                     vector[double]& hk, vector[int]& hv) noexcept nogil:
    cdef int x, y
    cdef double dk, nd
    cdef long long e
    for x in range(n):
        dist[x] = INF
        settled[x] = 0
    dist[source] = 0.0
    hk.clear()
    hv.clear()
    heap_push(hk, hv, 0.0, source)
    while hk.size() > 0:
        heap_pop(hk, hv, &dk, &x)
        if settled[x]:
            continue
        settled[x] = 1
        for e in range(indptr[x], indptr[x + 1]):
            y = nbrs[e]
            if blocked[y]:
                continue
            nd = dk + wts[e]
            if nd < dist[y]:
                dist[y] = nd
                heap_push(hk, hv, nd, y)


def sssp(indptr, nbrs, wts, n_, source, blocked):
    """Single-source shortest paths on a CSR graph with blocked vertices."""
    cdef int n = int(n_)
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int32_t[::1] nb = np.ascontiguousarray(nbrs, dtype=np.int32)
    cdef double[::1] ws = np.ascontiguousarray(wts, dtype=np.float64)
    cdef cnp.uint8_t[::1] bl = np.ascontiguousarray(blocked, dtype=np.uint8)
    dist_arr = np.empty(n)
    settled_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] dist = dist_arr
    cdef cnp.uint8_t[::1] st = settled_arr
    cdef vector[double] hk
    cdef vector[int] hv
    cdef int src = int(source)
    with nogil:
        _sssp_core(ip, nb, ws, n, src, bl, dist, st, hk, hv)
    return dist_arr


def max_stretch(indptr, nbrs, wts, n_, blocked, dmat):
    """Worst stretch over surviving pairs (see _kernels_py for semantics)."""
    cdef int n = int(n_)
    cdef long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int32_t[::1] nb = np.ascontiguousarray(nbrs, dtype=np.int32)
    cdef double[::1] ws = np.ascontiguousarray(wts, dtype=np.float64)
    cdef cnp.uint8_t[::1] bl = np.ascontiguousarray(blocked, dtype=np.uint8)
    cdef double[:, ::1] dm = np.ascontiguousarray(dmat, dtype=np.float64)
    dist_arr = np.empty(n)
    settled_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] dist = dist_arr
    cdef cnp.uint8_t[::1] st = settled_arr
    cdef vector[double] hk
    cdef vector[int] hv
    cdef double best = 0.0
    cdef double ratio
    cdef int bu = -1, bv = -1
    cdef int u, v
    cdef bint disconnected = 0
    with nogil:
        for u in range(n):
            if bl[u]:
                continue
            _sssp_core(ip, nb, ws, n, u, bl, dist, st, hk, hv)
            for v in range(u + 1, n):
                if bl[v]:
                    continue
                if dist[v] == INF:
                    best = INF
                    bu = u
                    bv = v
                    disconnected = 1
                    break
                ratio = dist[v] / dm[u, v]
                if ratio > best:
                    best = ratio
                    bu = u
                    bv = v
            if disconnected:
                break
    return best, bu, bv
