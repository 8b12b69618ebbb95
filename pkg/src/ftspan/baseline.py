"""MST, the input light (1+eps)-spanner, and shortest-path queries.

The light spanner uses the path-greedy rule: scan pairs by nondecreasing
distance and add (u, v) iff the current spanner distance exceeds
(1+eps) * d(u, v). It is quadratic but has constant lightness in doubling
metrics, and the fault-tolerant construction only consumes its edge list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ftspan import kernels
from ftspan.errors import InputError
from ftspan.metric import Metric, sorted_pairs


@dataclass
class WeightedGraph:
    """Geometric graph: edge weights equal metric distances exactly."""

    n: int
    eu: np.ndarray
    ev: np.ndarray
    ew: np.ndarray
    _csr: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedGraph":
        if len(edges) == 0:
            return cls(n, np.empty(0, np.int32), np.empty(0, np.int32), np.empty(0))
        eu, ev, ew = zip(*edges)
        return cls(n, np.asarray(eu, np.int32), np.asarray(ev, np.int32),
                   np.asarray(ew, np.float64))

    @property
    def m(self) -> int:
        return len(self.ew)

    def weight(self) -> float:
        return float(self.ew.sum())

    def edge_set(self) -> set[tuple[int, int]]:
        return {(min(int(u), int(v)), max(int(u), int(v)))
                for u, v in zip(self.eu, self.ev)}

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.eu, 1)
        np.add.at(deg, self.ev, 1)
        return deg

    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric CSR adjacency (indptr int64, nbrs int32, wts float64)."""
        if self._csr is None:
            heads = np.concatenate([self.eu, self.ev]).astype(np.int64)
            tails = np.concatenate([self.ev, self.eu]).astype(np.int32)
            wts = np.concatenate([self.ew, self.ew])
            order = np.argsort(heads, kind="stable")
            heads, tails, wts = heads[order], tails[order], wts[order]
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.add.at(indptr, heads + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._csr = (indptr, tails, wts)
        return self._csr


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def mst(m: Metric, pairs=None) -> tuple[WeightedGraph, float]:
    """Minimum spanning tree of the complete geometric graph.

    Kruskal over pairs sorted by (weight, min id, max id); this is the same
    scan order the greedy spanner uses, so its edges are a subset of any
    spanner built from the same order.
    """
    if m.n == 1:
        return WeightedGraph.from_edges(1, []), 0.0
    if pairs is None:
        pairs = sorted_pairs(m)
    pu, pv, pd = pairs
    uf = _UnionFind(m.n)
    edges = []
    for k in range(len(pd)):
        u, v = int(pu[k]), int(pv[k])
        if uf.union(u, v):
            edges.append((u, v, float(pd[k])))
            if len(edges) == m.n - 1:
                break
    tree = WeightedGraph.from_edges(m.n, edges)
    return tree, tree.weight()


def light_spanner(m: Metric, eps: float, pairs=None) -> WeightedGraph:
    """Path-greedy (1+eps)-spanner of the metric."""
    if not 0 < eps < 0.5:
        raise InputError(f"eps must be in (0, 1/2), got {eps}")
    if m.n == 1:
        return WeightedGraph.from_edges(1, [])
    if pairs is None:
        pairs = sorted_pairs(m)
    pu, pv, pd = pairs
    eu, ev = kernels.greedy_spanner(m.n, pu, pv, pd, 1.0 + eps)
    ew = m.pair_distances(eu.astype(np.int64), ev.astype(np.int64))
    return WeightedGraph(m.n, eu, ev, ew)


def shortest_dist(g: WeightedGraph, source: int, forbidden=()) -> np.ndarray:
    """Single-source distances with forbidden vertices deleted.

    Returns a float64 array indexed by point id; unreachable (and forbidden)
    entries hold +inf.
    """
    forbidden = set(int(x) for x in forbidden)
    if source in forbidden:
        raise InputError("source is forbidden")
    blocked = np.zeros(g.n, dtype=np.uint8)
    for x in forbidden:
        blocked[x] = 1
    indptr, nbrs, wts = g.csr()
    dist = kernels.sssp(indptr, nbrs, wts, g.n, int(source), blocked)
    if forbidden:
        dist[list(forbidden)] = np.inf
    return dist


def graph_weight(g: WeightedGraph) -> float:
    return g.weight()


def lightness(g: WeightedGraph, mst_weight: float) -> float:
    if mst_weight <= 0:
        raise InputError("lightness needs mst_weight > 0 (n >= 2)")
    return g.weight() / mst_weight


def save_graph(path: str, g: WeightedGraph) -> None:
    """Write "n m" header then one "u v weight" line per edge."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for u, v, w in zip(g.eu, g.ev, g.ew):
            fh.write(f"{int(u)} {int(v)} {repr(float(w))}\n")


def load_graph(path: str, m: Metric | None = None) -> WeightedGraph:
    """Read a graph file; cross-check weights against the metric (1e-9 rel)."""
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 2:
            raise InputError(f"{path}:1: expected 'n m' header")
        n, mm = int(head[0]), int(head[1])
        edges = []
        for lineno in range(2, mm + 2):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise InputError(f"{path}:{lineno}: expected 'u v weight'")
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"{path}:{lineno}: vertex id out of range")
            if m is not None:
                d = m.distance(u, v)
                if abs(d - w) > 1e-9 * max(1.0, abs(d)):
                    raise InputError(
                        f"{path}:{lineno}: weight {w} disagrees with metric distance {d}")
            edges.append((u, v, w))
    return WeightedGraph.from_edges(n, edges)
