"""Surrogate selection and the fast maintenance layer behind it.

Reference mode answers every pool query with a direct ball scan:
P(x) = B(x, 4 r_i) and P+(x) = B(x, 16 r_i). Fast mode keeps, per node,
a recursively-defined extended pool (sandwiched between B(x, 12 r_i) and
B(x, 16 r_i)), a capped list of semi-saturated points (SSList) fed by
artificial leaves, and a cursor-backed Clean list over the 4-ball. Both
modes select the same way: semi-saturated points are preferred over clean
ones, ties broken by ascending point id.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ftspan.errors import GuaranteeError
from ftspan.metric import Metric
from ftspan.net_tree import NetTree, Node, radius

CLEAN = "clean"
SEMI = "semi-saturated"
SATURATED = "saturated"


def classify_point(p: int, deg, saturated, c2f: float) -> str:
    if saturated[p]:
        return SATURATED
    return SEMI if deg[p] > c2f else CLEAN


@dataclass
class Counters:
    """Instrumentation exported in the build report."""

    select_calls: int = 0
    pool_scans: int = 0
    sslist_reads: int = 0
    node_deletions: int = 0
    replenish_visits: int = 0
    artificial_leaves: int = 0
    crossings: int = 0
    surrogate_shortfalls: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    def amortized_work(self) -> int:
        """The work the fast-pool bound is asserted over."""
        return self.sslist_reads + self.node_deletions + self.replenish_visits


def select(node: Node, state, recorder=None) -> list[int]:
    """SelectSurrogate: the surrogate set S(x) for a node at the current level.

    Small nodes take their lowest-id non-saturated leaves (all of them when
    fewer than f+1 exist). Large nodes prefer non-saturated points of degree
    >= c2 f from the extended pool, then fill with low-degree points from the
    4-ball, both by ascending id. A complete node ending up with fewer than
    f+1 surrogates violates the construction guarantee: hard error in
    faithful profile, counted warning in practical.
    """
    u, level = node
    cfg = state.cfg
    f = cfg.faults
    state.counters.select_calls += 1
    if state.is_small(node):
        leaves = state.tree.leaves(u, level)
        picked = [int(p) for p in leaves if not state.saturated[p]][: f + 1]
    else:
        sprime = state.pools.semi_saturated(node, state)
        picked = sprime[: f + 1]
        if len(picked) < f + 1:
            picked = picked + state.pools.clean(node, state, f + 1 - len(picked))
    if len(picked) < f + 1 and state.is_complete(node):
        state.counters.surrogate_shortfalls += 1
        if cfg.profile == "faithful":
            raise GuaranteeError(
                f"complete node {node} got only {len(picked)} surrogates")
    if state.check_priority:
        _assert_priority(node, picked, state)
    if recorder is not None:
        recorder(node, picked)
    return picked


def _assert_priority(node: Node, picked: list[int], state) -> None:
    # Whenever S(x) contains a clean point, every semi-saturated point of the
    # guaranteed pool region must be in S(x) too. Reference pools guarantee
    # the full 16-ball; fast pools guarantee the 12-ball (sandwich lower end).
    u, level = node
    if state.is_small(node):
        return
    cfg = state.cfg
    c2f = cfg.c2 * cfg.faults
    has_clean = any(state.deg[p] <= c2f and not state.saturated[p] for p in picked)
    if not has_clean:
        return
    r = 12.0 if state.cfg.fast_pools else 16.0
    ball = np.flatnonzero(state.tree.metric.dist_row(u) <= r * radius(level))
    for p in ball:
        p = int(p)
        if not state.saturated[p] and state.deg[p] > c2f:
            assert p in picked, (
                f"priority violated at {node}: semi-saturated {p} omitted")


class ReferencePools:
    """Direct ball scans; the default for moderate n."""

    def semi_saturated(self, node: Node, state) -> list[int]:
        u, level = node
        c2f = state.cfg.c2 * state.cfg.faults
        row = state.tree.metric.dist_row(u)
        state.counters.pool_scans += len(row)
        ids = np.flatnonzero(row <= 16.0 * radius(level))
        return [int(p) for p in ids
                if not state.saturated[p] and state.deg[p] > c2f]

    def clean(self, node: Node, state, need: int) -> list[int]:
        u, level = node
        c2f = state.cfg.c2 * state.cfg.faults
        row = state.tree.metric.dist_row(u)
        state.counters.pool_scans += len(row)
        ids = np.flatnonzero(row <= 4.0 * radius(level))
        out = [int(p) for p in ids if state.deg[p] <= c2f][:need]
        return out

    # lifecycle hooks (no-ops in reference mode)
    def record_crossing(self, p: int, level: int, state) -> None:
        pass

    def on_saturated(self, points, state) -> None:
        pass


# -- fast mode ----------------------------------------------------------------

@dataclass
class TPlusNode:
    """Node of the extended structure T+ (real tree nodes and artificial leaves)."""

    key: tuple
    level: int
    deleted: bool = False
    children: list = field(default_factory=list)     # extended children (TPlusNode)
    parents: list = field(default_factory=list)      # extended parents (TPlusNode)
    points: list = field(default_factory=list)       # artificial leaves only
    live: int = 0                                    # live points (leaves only)
    rho: "TPlusNode | None" = None                   # some live extended leaf below
    memo: list | None = None
    memo_level: int = -1
    memo_truncated: bool = False

    def is_leaf(self) -> bool:
        return not self.children


class FastPools:
    """Recursive extended pools with SSList / Clean / artificial-leaf upkeep."""

    def __init__(self, tree: NetTree, cfg):
        self.tree = tree
        self.cfg = cfg
        self.nodes: dict[tuple, TPlusNode] = {}
        self.clean_lists: dict[Node, _CleanList] = {}
        self.rho_targets: dict[tuple, set] = {}
        self._level_grids: dict[int, _PointGrid] = {}
        self._ext_children_pos: list | None = None
        self._jump: dict[tuple, list[list[tuple]]] = {}
        self._build_ext_children()

    # T+ skeleton ------------------------------------------------------------

    def _build_ext_children(self) -> None:
        t = self.tree
        self._ext_children_pos = [None, None]
        for i in range(2, t.zeta + 1):
            up = t.nets[i]
            low = t.nets[i - 2]
            reach = 12.0 * radius(i) + 12.0 * radius(i - 2)
            lists = []
            step = max(1, (1 << 22) // max(1, len(low)))
            for s in range(0, len(up), step):
                block = t.metric.dist_block(up[s:s + step], low)
                for r in range(block.shape[0]):
                    lists.append(np.flatnonzero(block[r] <= reach))
            self._ext_children_pos.append(lists)
        for i in range(2, t.zeta + 1):
            for k, u in enumerate(t.nets[i]):
                parent = self._real(int(u), i)
                for pos in self._ext_children_pos[i][k]:
                    child = self._real(int(t.nets[i - 2][pos]), i - 2)
                    parent.children.append(child)
                    child.parents.append(parent)

    def _real(self, u: int, level: int) -> TPlusNode:
        key = ("n", u, level)
        node = self.nodes.get(key)
        if node is None:
            node = TPlusNode(key=key, level=level)
            self.nodes[key] = node
        return node

    def _grid(self, level: int) -> "_PointGrid":
        if level not in self._level_grids:
            self._level_grids[level] = _PointGrid(self.tree, level)
        return self._level_grids[level]

    # artificial leaves --------------------------------------------------------

    def record_crossing(self, p: int, level: int, state) -> None:
        """A point crossed the c2 f degree threshold during this iteration.

        Attach it to an artificial leaf of every node at this level and the
        next whose extended pool can contain it (16 r-ball test).
        """
        state.counters.crossings += 1
        capacity = self.cfg.ssc * self.cfg.faults
        for lv in (level, level + 1):
            if lv > self.tree.zeta:
                continue
            for u in self._grid(lv).within(p, 16.0 * radius(lv)):
                owner = self._real(u, lv)
                leaf = self._leaf_of(owner, state)
                leaf.points.append(p)
                leaf.live += 1
                if len(leaf.points) > capacity:
                    msg = (f"artificial leaf of ({u},{lv}) exceeded ssc*f = "
                           f"{capacity:g} points")
                    if self.cfg.profile == "faithful":
                        raise GuaranteeError(msg)
                    warnings.warn(msg, stacklevel=2)

    def _leaf_of(self, owner: TPlusNode, state) -> TPlusNode:
        key = ("leaf",) + owner.key[1:]
        leaf = self.nodes.get(key)
        if leaf is None:
            leaf = TPlusNode(key=key, level=owner.level - 1)
            self.nodes[key] = leaf
            owner.children.append(leaf)
            leaf.parents.append(owner)
            state.counters.artificial_leaves += 1
        if leaf.deleted:
            leaf.deleted = False  # revived by a fresh crossing
        return leaf

    # SSList ------------------------------------------------------------------

    def semi_saturated(self, node: Node, state) -> list[int]:
        u, level = node
        root = self._real(u, level)
        lst = self._sslist(root, state, level, cap=True)
        f = state.cfg.faults
        live = [p for p in lst if not state.saturated[p]]
        state.counters.sslist_reads += len(lst)
        if len(live) < f + 1 and root.memo_truncated:
            lst = self._sslist(root, state, level, cap=False)
            live = [p for p in lst if not state.saturated[p]]
            state.counters.sslist_reads += len(lst)
        return live

    def _sslist(self, tnode: TPlusNode, state, stamp: int, cap: bool) -> list[int]:
        if tnode.memo_level == stamp and not (tnode.memo_truncated and not cap):
            return tnode.memo
        capacity = int(self.cfg.ssc * self.cfg.faults) if cap else None
        seen: set[int] = set()
        out: list[int] = []
        truncated = False
        state.counters.sslist_reads += 1
        if tnode.is_leaf():
            alive = [p for p in tnode.points if not state.saturated[p]]
            if len(alive) < tnode.live:
                tnode.points = alive
                tnode.live = len(alive)
                if tnode.live == 0 and not tnode.deleted:
                    self.node_deletion(tnode, state)
            out = sorted(set(alive))
        else:
            for child in tnode.children:
                if child.deleted:
                    continue
                for p in self._sslist(child, state, stamp, cap):
                    if p not in seen and not state.saturated[p]:
                        seen.add(p)
                        out.append(p)
            out.sort()
            if capacity is not None and len(out) > capacity:
                out = out[:capacity]
                truncated = True
                if self.cfg.profile == "faithful":
                    raise GuaranteeError(
                        f"SSList of {tnode.key} exceeded ssc*f = {capacity}")
                warnings.warn(f"SSList of {tnode.key} truncated to {capacity}",
                              stacklevel=2)
            if all(child.deleted for child in tnode.children) and not tnode.deleted:
                self.node_deletion(tnode, state)
        tnode.memo = out
        tnode.memo_level = stamp
        tnode.memo_truncated = truncated
        if tnode.rho is None or tnode.rho.deleted:
            tnode.rho = self._find_live_leaf(tnode)
            if tnode.rho is not None:
                self.rho_targets.setdefault(tnode.rho.key, set()).add(tnode.key)
        return out

    def _find_live_leaf(self, tnode: TPlusNode) -> TPlusNode | None:
        if tnode.deleted:
            return None
        if tnode.is_leaf():
            return tnode if tnode.live > 0 else None
        for child in tnode.children:
            if child.deleted:
                continue
            found = self._find_live_leaf(child)
            if found is not None:
                return found
        return None

    # deletion ----------------------------------------------------------------

    def node_deletion(self, z: TPlusNode, state) -> None:
        """Mark z DELETED, re-point rho holders, cascade to exhausted parents."""
        if z.deleted:
            return
        state.counters.node_deletions += 1
        z.deleted = True
        for holder_key in self.rho_targets.pop(z.key, ()):  # re-point rho(x') = z
            holder = self.nodes.get(holder_key)
            if holder is None or holder.deleted:
                continue
            # walk the holder's extended children (the paper routes the search
            # through an extended parent of z below the holder; the ancestor
            # test uses the jump ladder)
            repl = None
            for parent in z.parents:
                if parent.deleted:
                    continue
                if holder is parent or self.is_extended_ancestor(holder, parent):
                    repl = self._find_live_leaf(parent)
                    if repl is not None:
                        break
            if repl is None:
                repl = self._find_live_leaf(holder)
            holder.rho = repl
            if repl is not None:
                self.rho_targets.setdefault(repl.key, set()).add(holder.key)
        for parent in z.parents:
            if not parent.deleted and all(c.deleted for c in parent.children):
                self.node_deletion(parent, state)

    # jump pointers -------------------------------------------------------------

    def _jump_row(self, tnode: TPlusNode, j: int) -> list[tuple]:
        rows = self._jump.setdefault(tnode.key, [])
        while len(rows) <= j:
            k = len(rows)
            if k == 0:
                rows.append(sorted({p.key for p in tnode.parents if p.key[0] == "n"}))
            else:
                acc = set()
                for key in rows[k - 1]:
                    acc.update(self._jump_row(self.nodes[key], k - 1))
                rows.append(sorted(acc))
        return rows[j]

    def extended_ancestors_at(self, tnode: TPlusNode, hops: int) -> set[tuple]:
        """Extended ancestors exactly `hops` parent-hops above, via the ladder.

        The hop count decomposes in binary over the power-of-two rows.
        """
        frontier = {tnode.key}
        j = 0
        while hops:
            if hops & 1:
                nxt = set()
                for key in frontier:
                    nxt.update(self._jump_row(self.nodes[key], j))
                frontier = nxt
                if not frontier:
                    return frontier
            hops >>= 1
            j += 1
        return frontier

    def is_extended_ancestor(self, anc: TPlusNode, node: TPlusNode) -> bool:
        if (anc.level - node.level) % 2 != 0 or anc.level <= node.level:
            return False
        hops = (anc.level - node.level) // 2
        return anc.key in self.extended_ancestors_at(node, hops)

    # Clean lists ---------------------------------------------------------------

    def clean(self, node: Node, state, need: int) -> list[int]:
        lst = self.clean_lists.get(node)
        if lst is None:
            lst = _CleanList(node, state)
            self.clean_lists[node] = lst
        return lst.take(state, need)

    def on_saturated(self, points, state) -> None:
        # saturated entries are skipped lazily at read time
        pass


class _CleanList:
    """<= 4f+4 clean points of the 4-ball, replenished from an id-ordered cursor.

    Every candidate is visited at most once per node; entries that turned
    semi-saturated are purged at read and replaced by advancing the cursor,
    so the live entries are always the lowest-id clean points of the ball.
    """

    def __init__(self, node: Node, state):
        u, level = node
        row = state.tree.metric.dist_row(u)
        state.counters.pool_scans += len(row)
        self.candidates = np.flatnonzero(row <= 4.0 * radius(level))
        self.cursor = 0
        self.entries: list[int] = []
        self.node = node

    def _replenish(self, state) -> None:
        cfg = state.cfg
        c2f = cfg.c2 * cfg.faults
        cap = 4 * cfg.faults + 4
        self.entries = [p for p in self.entries
                        if state.deg[p] <= c2f and not state.saturated[p]]
        while len(self.entries) < cap and self.cursor < len(self.candidates):
            p = int(self.candidates[self.cursor])
            self.cursor += 1
            state.counters.replenish_visits += 1
            if state.deg[p] <= c2f and not state.saturated[p]:
                self.entries.append(p)

    def take(self, state, need: int) -> list[int]:
        self._replenish(state)
        return self.entries[:need]


# -- extended pool audit op ---------------------------------------------------

def extended_pool(tree: NetTree, node: Node, memo: dict | None = None) -> np.ndarray:
    """P+(x) per the recursive definition (audit/diagnostic computation).

    Levels <= 3 take the full 16-ball; higher levels take the union of the
    extended pools of level-(i-2) nodes whose 12-balls intersect B(x, 12 r_i).
    """
    if memo is None:
        memo = {}
    if node in memo:
        return memo[node]
    u, level = node
    if level <= 3:
        out = np.flatnonzero(tree.metric.dist_row(u) <= 16.0 * radius(level))
    else:
        low = tree.nets[level - 2]
        reach = 12.0 * radius(level) + 12.0 * radius(level - 2)
        d = tree.metric.dist_block(np.array([u]), low)[0]
        parts = [extended_pool(tree, (int(q), level - 2), memo)
                 for q in low[d <= reach]]
        out = np.unique(np.concatenate(parts)) if parts else np.empty(0, np.int64)
    memo[node] = out
    return out


def check_sandwich(tree: NetTree, levels=None) -> None:
    """Assert B(x, 12 r_i) within P+(x) within B(x, 16 r_i) for every node."""
    memo: dict = {}
    levels = range(tree.zeta + 1) if levels is None else levels
    for i in levels:
        for u in tree.nets[i]:
            u = int(u)
            pool = set(extended_pool(tree, (u, i), memo).tolist())
            row = tree.metric.dist_row(u)
            inner = set(np.flatnonzero(row <= 12.0 * radius(i)).tolist())
            outer = set(np.flatnonzero(row <= 16.0 * radius(i)).tolist())
            assert inner <= pool, f"sandwich lower bound violated at ({u},{i})"
            assert pool <= outer, f"sandwich upper bound violated at ({u},{i})"


class _PointGrid:
    """Per-level geometric index over net points for radius queries.

    Grid cells for coordinate metrics (cell width tied to the level radius);
    a plain scan for matrix metrics. Results are exact either way.
    """

    def __init__(self, tree: NetTree, level: int):
        self.tree = tree
        self.level = level
        self.net = tree.nets[level]
        m = tree.metric
        self.cell = 16.0 * radius(level)
        if m.coords is not None and m.coords.shape[1] <= 4:
            self.cells: dict | None = {}
            for u in self.net:
                key = tuple((m.coords[u] // self.cell).astype(np.int64))
                self.cells.setdefault(key, []).append(int(u))
        else:
            self.cells = None

    def within(self, p: int, rad: float) -> list[int]:
        m = self.tree.metric
        if self.cells is None:
            d = m.dist_block(np.array([p]), self.net)[0]
            return [int(u) for u in self.net[d <= rad]]
        from itertools import product as iproduct
        span = int(np.ceil(rad / self.cell))
        base = (m.coords[p] // self.cell).astype(np.int64)
        out = []
        dim = m.coords.shape[1]
        for off in iproduct(range(-span, span + 1), repeat=dim):
            bucket = self.cells.get(tuple(base + np.asarray(off)))
            if not bucket:
                continue
            cand = np.asarray(bucket, dtype=np.int64)
            diff = m.coords[cand] - m.coords[p]
            hit = cand[np.sqrt((diff * diff).sum(axis=1)) <= rad]
            out.extend(int(u) for u in hit)
        out.sort()
        return out
