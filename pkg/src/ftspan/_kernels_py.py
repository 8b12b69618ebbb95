"""Pure-Python kernel implementations.

Fallback backend used when the compiled extension is unavailable. The
algorithms, tie-breaking and float arithmetic order mirror ``_kernels.pyx``
exactly, so both backends produce identical outputs (only speed differs).
"""

import heapq

import numpy as np

BACKEND = "python"


def greedy_spanner(n, pu, pv, pd, t):
    """Path-greedy spanner over pre-sorted candidate pairs.

    Scans pairs (pu[k], pv[k]) with distances pd[k] in the given order and
    adds an edge iff the current spanner distance exceeds t * pd[k].
    Distances already proven small are cached (they only shrink as edges are
    added, so a cached bound stays valid).

    Returns (eu, ev): int32 arrays of accepted edge endpoints, in insertion
    order.
    """
    cache = np.full((n, n), np.inf)
    np.fill_diagonal(cache, 0.0)
    adj = [[] for _ in range(n)]
    eu, ev = [], []
    m = len(pd)
    for k in range(m):
        u = int(pu[k])
        v = int(pv[k])
        d = float(pd[k])
        bound = t * d
        if cache[u, v] <= bound:
            continue
        _bounded_dijkstra(adj, u, bound, cache)
        if cache[u, v] <= bound:
            continue
        adj[u].append((v, d))
        adj[v].append((u, d))
        eu.append(u)
        ev.append(v)
        if d < cache[u, v]:
            cache[u, v] = d
            cache[v, u] = d
    return np.asarray(eu, dtype=np.int32), np.asarray(ev, dtype=np.int32)


def _bounded_dijkstra(adj, src, bound, cache):
    # Settles every vertex within distance <= bound of src and refreshes the
    # cache rows with the exact current distances.
    dist = {src: 0.0}
    settled = set()
    heap = [(0.0, src)]
    row = cache[src]
    while heap:
        dk, x = heapq.heappop(heap)
        if x in settled:
            continue
        if dk > bound:
            break
        settled.add(x)
        if dk < row[x]:
            row[x] = dk
            cache[x, src] = dk
        for y, w in adj[x]:
            nd = dk + w
            if nd <= bound and nd < dist.get(y, np.inf):
                dist[y] = nd
                heapq.heappush(heap, (nd, y))


def sssp(indptr, nbrs, wts, n, source, blocked):
    """Single-source shortest paths on a CSR graph with blocked vertices.

    Blocked vertices (blocked[x] != 0) are treated as deleted; their
    distance stays +inf. The caller guarantees the source is not blocked.
    """
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    settled = np.zeros(n, dtype=bool)
    heap = [(0.0, int(source))]
    while heap:
        dk, x = heapq.heappop(heap)
        if settled[x]:
            continue
        settled[x] = True
        for e in range(indptr[x], indptr[x + 1]):
            y = int(nbrs[e])
            if blocked[y]:
                continue
            nd = dk + float(wts[e])
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def max_stretch(indptr, nbrs, wts, n, blocked, dmat):
    """Worst stretch over surviving pairs of a CSR graph vs metric distances.

    Returns (ratio, u, v). ratio is +inf with the first disconnected pair
    (in ascending (u, v) scan order) as witness; otherwise the maximum of
    graph_dist(u, v) / dmat[u, v] with the first pair attaining it.
    """
    alive = np.flatnonzero(np.asarray(blocked) == 0)
    best = 0.0
    bu = bv = -1
    for u in alive:
        du = sssp(indptr, nbrs, wts, n, int(u), blocked)
        tail = alive[alive > u]
        if tail.size == 0:
            continue
        dd = du[tail]
        if np.isinf(dd).any():
            v = int(tail[np.flatnonzero(np.isinf(dd))[0]])
            return np.inf, int(u), v
        ratios = dd / dmat[u, tail]
        k = int(np.argmax(ratios))
        if ratios[k] > best:
            best = float(ratios[k])
            bu = int(u)
            bv = int(tail[k])
    return best, bu, bv
