"""Greedy net tree and cross-edge machinery.

Levels carry radii r_i = 5^i. N_0 is the whole point set; N_i is a greedy
r_i-net of N_{i-1} built by scanning surviving points in ascending id order.
A node is the pair (point id, level); a point appearing in many nets yields
one node per level, all sharing the representative point.

Cross edges, NC(x), Cross(A), Aug_j(x) and original cross edges follow the
construction's definitions; all queries are pure and cached per level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ftspan.errors import InputError
from ftspan.metric import MIN_DISTANCE, Metric

Node = tuple[int, int]  # (point id, level)
CrossEdge = tuple[int, int, int]  # (x point id, y point id, level), x < y


def radius(level: int) -> float:
    """r_i = 5^i (exact in doubles up to level 22)."""
    return float(5 ** level)


def ceil_log5(value: float) -> int:
    """Smallest integer i with 5^i >= value (exact, no float log)."""
    i = 0
    r = 1.0
    while r < value:
        r *= 5.0
        i += 1
    return i


@dataclass
class NetTree:
    metric: Metric
    zeta: int
    nets: list[np.ndarray]          # per level, ascending point ids
    parents: list[np.ndarray]       # parents[i][k] = parent point id of (nets[i][k], i)
    anc: np.ndarray                 # anc[j][u] = ancestor point of (u, 0) at level j
    _leaf_lists: dict = field(default_factory=dict, repr=False)
    _nc_cache: dict = field(default_factory=dict, repr=False)
    _cross_nc_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.metric.n

    def net(self, level: int) -> np.ndarray:
        return self.nets[level]

    def has_node(self, u: int, level: int) -> bool:
        net = self.nets[level]
        k = np.searchsorted(net, u)
        return k < len(net) and net[k] == u

    def net_pos(self, u: int, level: int) -> int:
        net = self.nets[level]
        k = int(np.searchsorted(net, u))
        if k >= len(net) or net[k] != u:
            raise InputError(f"({u}, {level}) is not a node")
        return k

    def parent_point(self, u: int, level: int) -> int | None:
        """Parent point id of node (u, level), or None at the top level."""
        if level >= self.zeta:
            return None
        return int(self.parents[level][self.net_pos(u, level)])

    def ancestor(self, u: int, at_level: int) -> int:
        """Ancestor point of (u, 0) (equivalently of any node (u, j), j <= at_level)."""
        return int(self.anc[at_level][u])

    def leaves(self, u: int, level: int) -> np.ndarray:
        """Sorted point ids of the leaves of the subtree rooted at (u, level)."""
        starts, order = self._leaf_index(level)
        k = self.net_pos(u, level)
        return order[starts[k]:starts[k + 1]]

    def leaf_count(self, u: int, level: int) -> int:
        starts, _ = self._leaf_index(level)
        k = self.net_pos(u, level)
        return int(starts[k + 1] - starts[k])

    def _leaf_index(self, level: int):
        if level not in self._leaf_lists:
            # group all points by their level-`level` ancestor
            owner = self.anc[level]
            net = self.nets[level]
            order = np.argsort(owner, kind="stable").astype(np.int64)
            sorted_owner = owner[order]
            starts = np.searchsorted(sorted_owner, net, side="left")
            ends = np.searchsorted(sorted_owner, net, side="right")
            bounds = np.empty(len(net) + 1, dtype=np.int64)
            bounds[:-1] = starts
            bounds[-1] = ends[-1] if len(net) else 0
            # leaf ids ascending inside each group: stable argsort of arange
            self._leaf_lists[level] = (bounds, order)
        return self._leaf_lists[level]

    def descendants_at(self, u: int, level: int, lower: int) -> np.ndarray:
        """Point ids q with (q, lower) a descendant of (u, level); lower <= level."""
        if lower > level:
            raise InputError("descendants_at needs lower <= level")
        net = self.nets[lower]
        return net[self.anc[level][net] == u]

    # -- cross-edge machinery ------------------------------------------------

    def _nc_level(self, level: int, lam: float) -> list[np.ndarray]:
        """Per net position: sorted array of cross-neighbor positions."""
        key = (level, lam)
        if key not in self._nc_cache:
            net = self.nets[level]
            thresh = lam * radius(level)
            out = [None] * len(net)
            step = max(1, (1 << 22) // max(1, len(net)))
            for s in range(0, len(net), step):
                block = self.metric.dist_block(net[s:s + step], net)
                for r in range(block.shape[0]):
                    row = np.flatnonzero(block[r] <= thresh)
                    out[s + r] = row[row != s + r]
            self._nc_cache[key] = out
        return self._nc_cache[key]

    def cross_neighbors(self, node: Node, lam: float) -> list[Node]:
        """NC(x): same-level nodes y != x with d(x, y) <= lam * r_i."""
        u, level = node
        net = self.nets[level]
        pos = self.net_pos(u, level)
        return [(int(net[k]), level) for k in self._nc_level(level, lam)[pos]]

    def cross_nc_closed(self, node: Node, lam: float) -> tuple[CrossEdge, ...]:
        """Cross(NC[x]): cross edges with both ends in NC(x) + {x}. Memoized."""
        u, level = node
        key = (u, level, lam)
        if key not in self._cross_nc_cache:
            net = self.nets[level]
            pos = self.net_pos(u, level)
            members = np.append(self._nc_level(level, lam)[pos], pos)
            members.sort()
            ids = net[members]
            self._cross_nc_cache[key] = tuple(cross_set_ids(self.metric, ids, level, lam))
        return self._cross_nc_cache[key]

    def aug(self, node: Node, l: int, h: int, lam: float) -> set[CrossEdge]:
        """Augmented cross edges Aug(x, l, h) = union of Aug_j(x), j in [i+l, i+h].

        For j >= lvl(x): Cross(NC[y]) of the ancestor y at level j. For
        j < lvl(x): the union of Cross(NC[y]) over descendants y at level j.
        Levels outside [0, zeta] contribute nothing.
        """
        if l > h:
            raise InputError("aug needs l <= h")
        u, i = node
        out: set[CrossEdge] = set()
        for j in range(i + l, i + h + 1):
            if j < 0 or j > self.zeta:
                continue
            if j >= i:
                y = self.ancestor(u, j)
                out.update(self.cross_nc_closed((y, j), lam))
            else:
                for q in self.descendants_at(u, i, j):
                    out.update(self.cross_nc_closed((int(q), j), lam))
        return out

    def original_cross_edge(self, u: int, v: int, lam: float) -> tuple[Node, Node, int]:
        """Lowest-level ancestor pair of (u,0), (v,0) within lam * r_i.

        Exists because ancestors eventually coincide (distance 0).
        """
        if u == v:
            raise InputError("original_cross_edge needs u != v")
        for i in range(self.zeta + 1):
            a = self.ancestor(u, i)
            b = self.ancestor(v, i)
            if self.metric.distance(a, b) <= lam * radius(i):
                return (a, i), (b, i), i
        raise AssertionError("unreachable: top level has a single net point")


def cross_set_ids(metric: Metric, ids: np.ndarray, level: int, lam: float) -> list[CrossEdge]:
    """All cross edges among same-level nodes with the given point ids."""
    thresh = lam * radius(level)
    out = []
    if len(ids) < 2:
        return out
    block = metric.dist_block(ids, ids)
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            if block[a, b] <= thresh:
                x, y = int(ids[a]), int(ids[b])
                out.append((min(x, y), max(x, y), level))
    return out


def cross_set(t: NetTree, nodes: list[Node], lam: float) -> list[CrossEdge]:
    """Cross(A) for a set A of nodes, all at one level."""
    if not nodes:
        return []
    levels = {lvl for _, lvl in nodes}
    if len(levels) > 1:
        raise InputError(f"cross_set needs a single level, got {sorted(levels)}")
    level = levels.pop()
    ids = np.asarray(sorted(u for u, _ in nodes), dtype=np.int64)
    return cross_set_ids(t.metric, ids, level, lam)


def build_net_tree(m: Metric) -> NetTree:
    """Build the greedy net tree of a normalized metric.

    Net selection scans surviving points in ascending point id; a point joins
    N_i unless an already-chosen point lies strictly within r_i. Parents take
    the closest point of the next net, ties to the lowest id. If the top net
    still has several points (max distance exactly a power of 5), levels are
    extended until a single root remains.
    """
    n = m.n
    if n == 1:
        nets = [np.array([0], dtype=np.int64)]
        return NetTree(m, 0, nets, [], np.zeros((1, 1), dtype=np.int64))
    lo, hi = m.min_max_distance()
    if abs(lo - MIN_DISTANCE) > 1e-6 * MIN_DISTANCE:
        raise InputError(f"metric not normalized (min distance {lo}, expected 64)")
    zeta = ceil_log5(hi)
    nets = [np.arange(n, dtype=np.int64)]
    i = 1
    while True:
        prev = nets[-1]
        r = radius(i)
        if r <= lo:
            nets.append(prev.copy())
        else:
            nets.append(_greedy_net(m, prev, r))
        if i >= zeta:
            if len(nets[-1]) == 1:
                break
            zeta += 1  # max distance hit 5^zeta exactly; extend to a single root
        i += 1

    parents = []
    anc = np.empty((zeta + 1, n), dtype=np.int64)
    anc[0] = np.arange(n)
    for i in range(zeta):
        child_net = nets[i]
        up = nets[i + 1]
        par = _closest_in(m, child_net, up)
        parents.append(par)
        lookup = np.empty(n, dtype=np.int64)
        lookup[child_net] = par
        anc[i + 1] = lookup[anc[i]]
    return NetTree(m, zeta, nets, parents, anc)


def _greedy_net(m: Metric, candidates: np.ndarray, r: float) -> np.ndarray:
    chosen: list[int] = []
    if m.coords is not None and m.coords.shape[1] <= 4:
        return _greedy_net_grid(m, candidates, r)
    for u in candidates:
        u = int(u)
        ok = True
        if chosen:
            d = m.dist_block(np.array([u]), np.asarray(chosen, dtype=np.int64))[0]
            ok = bool((d >= r).all())
        if ok:
            chosen.append(u)
    return np.asarray(chosen, dtype=np.int64)


def _greedy_net_grid(m: Metric, candidates: np.ndarray, r: float) -> np.ndarray:
    # Uniform grid with cell width r: only neighboring cells can violate
    # separation, so each candidate checks O(1) chosen points. Results are
    # identical to the plain scan (exact distance checks decide).
    coords = m.coords
    dim = coords.shape[1]
    cells: dict[tuple, list[int]] = {}
    chosen: list[int] = []
    from itertools import product as iproduct
    offsets = list(iproduct((-1, 0, 1), repeat=dim))
    for u in candidates:
        u = int(u)
        cu = coords[u]
        cell = tuple((cu // r).astype(np.int64))
        ok = True
        for off in offsets:
            bucket = cells.get(tuple(c + o for c, o in zip(cell, off)))
            if not bucket:
                continue
            diff = coords[bucket] - cu
            if (np.sqrt((diff * diff).sum(axis=1)) < r).any():
                ok = False
                break
        if ok:
            chosen.append(u)
            cells.setdefault(cell, []).append(u)
    return np.asarray(chosen, dtype=np.int64)


def _closest_in(m: Metric, queries: np.ndarray, pool: np.ndarray) -> np.ndarray:
    """For each query point, the closest pool point (ties: lowest id)."""
    out = np.empty(len(queries), dtype=np.int64)
    step = max(1, (1 << 22) // max(1, len(pool)))
    for s in range(0, len(queries), step):
        block = m.dist_block(queries[s:s + step], pool)
        # pool is ascending by id, so argmin's first-minimum rule is the tie-break
        out[s:s + step] = pool[np.argmin(block, axis=1)]
    return out


# -- dumps and invariant checks ----------------------------------------------

def dump_nodes(t: NetTree) -> str:
    """Debug dump: one line per node "level point-id parent-point-id"."""
    lines = []
    for i in range(t.zeta + 1):
        for k, u in enumerate(t.nets[i]):
            par = int(t.parents[i][k]) if i < t.zeta else -1
            lines.append(f"{i} {int(u)} {par}")
    return "\n".join(lines) + "\n"


def dump_cross_edges(t: NetTree, edges) -> str:
    """Debug dump: one line per cross edge "level u v dist"."""
    lines = []
    for x, y, level in sorted(edges, key=lambda e: (e[2], e[0], e[1])):
        lines.append(f"{level} {x} {y} {repr(t.metric.distance(x, y))}")
    return "\n".join(lines) + "\n"


def check_invariants(t: NetTree) -> None:
    """Separation, covering, greedy-parent rule and the 5r/4 descendant bound.

    Exhaustive; intended for n <= 2000. Raises AssertionError on violation.
    """
    m = t.metric
    for i in range(1, t.zeta + 1):
        net = t.nets[i]
        r = radius(i)
        if len(net) > 1:
            block = m.dist_block(net, net)
            np.fill_diagonal(block, np.inf)
            assert block.min() >= r, f"level {i}: separation violated"
        prev = t.nets[i - 1]
        dists = m.dist_block(prev, net)
        assert (dists.min(axis=1) <= r).all(), f"level {i}: covering violated"
        # greedy parent: closest point of N_i, ties to lowest id
        want = net[np.argmin(dists, axis=1)]
        got = t.parents[i - 1]
        assert (want == got).all(), f"level {i}: parent rule violated"
    # Claim: a node and any descendant are within 5 r_i / 4
    for i in range(1, t.zeta + 1):
        for j in range(i):
            net = t.nets[j]
            up = t.anc[i][net]
            d = m.pair_distances(net, up)
            assert (d <= 1.25 * radius(i) + 1e-9).all(), \
                f"descendant bound violated between levels {j} and {i}"
