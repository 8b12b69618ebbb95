"""Two-phase fault-tolerant spanner construction.

Phase 1 walks the light spanner's edges and collects cross edges: the
original cross edge of each spanner edge plus the augmented cross edges of
its ancestors, kept only when long enough (>= 64 r at their level). Phase 2
sweeps levels bottom-up: it marks small/incomplete nodes, adds the
cross-neighborhood cliques triggered by incomplete descendants, marks
saturated points, and materializes every level's cross edges as bipartite
connections between surrogate sets.

Cross-edge sets are manipulated as packed numpy arrays per level; the
per-node clique definitions are evaluated through an equivalent global
filter (a pair enters iff some marked node is a cross neighbor of both
ends), which tests verify against the literal per-node enumeration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ftspan import kernels, surrogate
from ftspan.baseline import WeightedGraph, light_spanner, mst
from ftspan.errors import InputError
from ftspan.metric import MIN_DISTANCE, Metric, sorted_pairs
from ftspan.net_tree import NetTree, Node, build_net_tree, ceil_log5, radius

TAG_ORIGINAL = 0
TAG_AUG = 1
TAG_INC = 2
TAG_NAMES = {TAG_ORIGINAL: "original", TAG_AUG: "aug_of_original",
             TAG_INC: "incomplete_nc"}
NO_INC = -(10 ** 9)


@dataclass(frozen=True)
class Config:
    """Resolved construction parameters.

    faithful profile: lambda = 5^20 (1 + 1/eps). practical profile:
    lambda = max(64, ceil(kappa (1 + 1/eps))). Either way the degree
    thresholds are c1, c2, c3 = 50, 51, 55 * ceil(log5 lambda) * xi.
    """

    eps: float
    faults: int
    profile: str = "practical"
    kappa: float = 64.0
    xi: float = 16.0
    ssc: float = 32.0
    fast_pools: bool = False
    seed: int = 0
    audit_log: bool = False

    def __post_init__(self):
        if not 0 < self.eps < 0.5:
            raise InputError(f"eps must be in (0, 1/2), got {self.eps}")
        if self.faults < 1:
            raise InputError(f"faults must be >= 1, got {self.faults}")
        if self.profile not in ("practical", "faithful"):
            raise InputError(f"unknown profile {self.profile!r}")
        if self.xi <= 0 or self.ssc <= 0 or self.kappa <= 0:
            raise InputError("xi, ssc and kappa must be positive")

    @property
    def lam(self) -> float:
        if self.profile == "faithful":
            return float(5 ** 20) * (1.0 + 1.0 / self.eps)
        return max(64.0, float(math.ceil(self.kappa * (1.0 + 1.0 / self.eps))))

    @property
    def log_lam(self) -> int:
        return ceil_log5(self.lam)

    @property
    def c1(self) -> float:
        return 50.0 * self.log_lam * self.xi

    @property
    def c2(self) -> float:
        return 51.0 * self.log_lam * self.xi

    @property
    def c3(self) -> float:
        return 55.0 * self.log_lam * self.xi

    def resolved(self) -> dict:
        return {
            "eps": self.eps, "faults": self.faults, "profile": self.profile,
            "kappa": self.kappa, "xi": self.xi, "ssc": self.ssc,
            "fast_pools": self.fast_pools, "seed": self.seed,
            "lambda": self.lam, "log_lambda": self.log_lam,
            "c1": self.c1, "c2": self.c2, "c3": self.c3,
        }


class CrossEdgeStore:
    """Deduplicated cross edges E*, partitioned by level, tagged by provenance.

    Additions arrive in bulk (originals and phase-1 augs up front, trigger
    cliques at their level's iteration); a level is finalized right before
    the sweep processes it, merging duplicates with tag priority
    original > aug_of_original > incomplete_nc.
    """

    def __init__(self, n: int):
        self.n = n
        self.pending: dict[int, list] = {}
        self.final: dict[int, tuple] = {}

    def add(self, level: int, a_ids, b_ids, tag: int) -> None:
        if level in self.final:
            raise InputError(f"level {level} already finalized")
        a = np.asarray(a_ids, dtype=np.int64)
        b = np.asarray(b_ids, dtype=np.int64)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        keys = lo * self.n + hi
        tags = np.full(len(keys), tag, dtype=np.uint8)
        self.pending.setdefault(level, []).append((keys, tags))

    def finalize(self, level: int, metric: Metric):
        """Sorted (a, b, d, tag) arrays for the level; ascending (d, a, b)."""
        if level in self.final:
            return self.final[level]
        chunks = self.pending.pop(level, [])
        if not chunks:
            out = (np.empty(0, np.int64), np.empty(0, np.int64),
                   np.empty(0, np.float64), np.empty(0, np.uint8))
            self.final[level] = out
            return out
        keys = np.concatenate([c[0] for c in chunks])
        tags = np.concatenate([c[1] for c in chunks])
        order = np.lexsort((tags, keys))
        keys, tags = keys[order], tags[order]
        first = np.ones(len(keys), dtype=bool)
        first[1:] = keys[1:] != keys[:-1]
        keys, tags = keys[first], tags[first]
        a = keys // self.n
        b = keys % self.n
        d = metric.pair_distances(a, b)
        order = np.lexsort((b, a, d))
        out = (a[order], b[order], d[order], tags[order])
        self.final[level] = out
        return out

    def counts_by_tag(self) -> dict[str, int]:
        counts = {name: 0 for name in TAG_NAMES.values()}
        for a, _b, _d, tags in self.final.values():
            for tag, cnt in zip(*np.unique(tags, return_counts=True)):
                counts[TAG_NAMES[int(tag)]] += int(cnt)
        return counts


@dataclass
class ConstructionState:
    """Mutable sweep state: degrees, marks, pools, instrumentation."""

    tree: NetTree
    cfg: Config
    deg: np.ndarray
    saturated: np.ndarray
    pools: object
    counters: surrogate.Counters
    small: dict[int, np.ndarray] = field(default_factory=dict)
    incomplete: dict[int, np.ndarray] = field(default_factory=dict)
    nearest_inc: dict[int, np.ndarray] = field(default_factory=dict)
    current_level: int = 0
    check_priority: bool = False
    surrogates: dict[Node, tuple] = field(default_factory=dict)
    events: list | None = None

    @classmethod
    def fresh(cls, tree: NetTree, cfg: Config) -> "ConstructionState":
        n = tree.n
        pools = surrogate.FastPools(tree, cfg) if cfg.fast_pools \
            else surrogate.ReferencePools()
        return cls(tree=tree, cfg=cfg, deg=np.zeros(n, dtype=np.int64),
                   saturated=np.zeros(n, dtype=bool), pools=pools,
                   counters=surrogate.Counters(),
                   events=[] if cfg.audit_log else None,
                   check_priority=cfg.audit_log)

    def is_small(self, node: Node) -> bool:
        u, level = node
        return bool(self.small[level][self.tree.net_pos(u, level)])

    def is_incomplete(self, node: Node) -> bool:
        u, level = node
        return bool(self.incomplete[level][self.tree.net_pos(u, level)])

    def is_complete(self, node: Node) -> bool:
        return not self.is_incomplete(node)

    def bump_degree(self, p: int) -> None:
        c2f = self.cfg.c2 * self.cfg.faults
        before = self.deg[p]
        self.deg[p] = before + 1
        if before <= c2f < before + 1:
            self.pools.record_crossing(p, self.current_level, self)

    def mark_saturated_sweep(self) -> None:
        newly = np.flatnonzero((self.deg > self.cfg.c3 * self.cfg.faults)
                               & ~self.saturated)
        if len(newly):
            self.saturated[newly] = True
            self.pools.on_saturated(newly, self)
            if self.events is not None:
                self.events.append(("saturated", self.current_level,
                                    tuple(int(x) for x in newly)))


def bipartite_connection(sx: list[int], sy: list[int], f: int) -> list[tuple[int, int]]:
    """M(S(x), S(y)): perfect matching when both sets have f+1 points,
    otherwise the full bipartite product; self-pairs are skipped."""
    if not sx or not sy:
        raise InputError("bipartite_connection needs nonempty surrogate sets")
    if min(len(sx), len(sy)) < f + 1:
        return [(p, q) for p in sx for q in sy if p != q]
    return [(p, q) for p, q in zip(sx, sy) if p != q]


def _annulus_pairs(tree: NetTree, level: int, lo: float, hi: float, cache: dict):
    """All net pairs at a level with lo r <= d <= hi r; net positions + distances."""
    key = (level, lo, hi)
    if key not in cache:
        net = tree.nets[level]
        a_out, b_out, d_out = [], [], []
        step = max(1, (1 << 22) // max(1, len(net)))
        for s in range(0, len(net), step):
            block = tree.metric.dist_block(net[s:s + step], net)
            rows, cols = np.nonzero((block >= lo * radius(level))
                                    & (block <= hi * radius(level)))
            rows = rows + s
            keep = rows < cols
            a_out.append(rows[keep])
            b_out.append(cols[keep])
            d_out.append(block[rows[keep] - s, cols[keep]])
        cache[key] = (np.concatenate(a_out).astype(np.int64),
                      np.concatenate(b_out).astype(np.int64),
                      np.concatenate(d_out))
    return cache[key]


def _pairs_with_marked_witness(tree: NetTree, level: int, lam: float,
                               marked: np.ndarray, cache: dict):
    """Annulus pairs (a, b) such that some marked node has both ends among
    its cross neighbors. A marked endpoint is its own witness; the rare
    remainder is checked directly."""
    a_pos, b_pos, _d = _annulus_pairs(tree, level, 64.0, lam, cache)
    if len(a_pos) == 0 or not marked.any():
        return np.empty(0, np.int64), np.empty(0, np.int64)
    fast = marked[a_pos] | marked[b_pos]
    keep_a = [a_pos[fast]]
    keep_b = [b_pos[fast]]
    rest = np.flatnonzero(~fast)
    if len(rest):
        net = tree.nets[level]
        thresh = lam * radius(level)
        marked_ids = net[marked]
        sel_a, sel_b = [], []
        for k in rest:
            a, b = int(net[a_pos[k]]), int(net[b_pos[k]])
            da = tree.metric.dist_block(np.array([a]), marked_ids)[0]
            db = tree.metric.dist_block(np.array([b]), marked_ids)[0]
            if ((da <= thresh) & (db <= thresh)).any():
                sel_a.append(a_pos[k])
                sel_b.append(b_pos[k])
        keep_a.append(np.asarray(sel_a, dtype=np.int64))
        keep_b.append(np.asarray(sel_b, dtype=np.int64))
    return np.concatenate(keep_a), np.concatenate(keep_b)


def phase1_collect(g: WeightedGraph, tree: NetTree, cfg: Config,
                   annulus_cache: dict | None = None) -> CrossEdgeStore:
    """Phase 1: original cross edges of every spanner edge plus the long-enough
    augmented cross edges of their ancestors within 5 log(lambda) levels."""
    store = CrossEdgeStore(tree.n)
    if g.m == 0:
        return store
    if annulus_cache is None:
        annulus_cache = {}
    lam = cfg.lam
    window = 5 * cfg.log_lam
    m = tree.metric
    eu = g.eu.astype(np.int64)
    ev = g.ev.astype(np.int64)

    anchors = np.full(g.m, -1, dtype=np.int64)
    for i in range(tree.zeta + 1):
        open_ = np.flatnonzero(anchors < 0)
        if len(open_) == 0:
            break
        a = tree.anc[i][eu[open_]]
        b = tree.anc[i][ev[open_]]
        d = m.pair_distances(a, b)
        hit = d <= lam * radius(i)
        hit &= a != b
        idx = open_[hit]
        if len(idx):
            anchors[idx] = i
            store.add(i, tree.anc[i][eu[idx]], tree.anc[i][ev[idx]], TAG_ORIGINAL)
        # ancestors that coincide have distance 0 <= lam r: treat as anchored
        # with no cross edge to store (cannot happen for lam >= 10, guarded)
        merged = open_[(d <= lam * radius(i)) & (a == b)]
        anchors[merged] = i

    ends = np.concatenate([eu, ev])
    end_anchor = np.concatenate([anchors, anchors])
    for j in range(tree.zeta + 1):
        sel = (end_anchor <= j) & (j <= end_anchor + window)
        if not sel.any():
            continue
        net = tree.nets[j]
        ypts = np.unique(tree.anc[j][ends[sel]])
        marked = np.zeros(len(net), dtype=bool)
        marked[np.searchsorted(net, ypts)] = True
        a_pos, b_pos = _pairs_with_marked_witness(tree, j, lam, marked,
                                                  annulus_cache)
        if len(a_pos):
            store.add(j, net[a_pos], net[b_pos], TAG_AUG)
    return store


def mark_small_and_incomplete(tree: NetTree, state: ConstructionState, level: int,
                              store: CrossEdgeStore,
                              annulus_cache: dict | None = None) -> None:
    """Level-i marking step: small / incomplete flags, the incomplete-descendant
    trigger, and the triggered NC-clique additions to E*."""
    cfg = state.cfg
    net = tree.nets[level]
    bounds, order = tree._leaf_index(level)
    leaf_deg = state.deg[order]
    if len(net):
        maxima = np.maximum.reduceat(leaf_deg, bounds[:-1])
    else:
        maxima = np.empty(0, dtype=np.int64)
    small = maxima <= cfg.c1 * cfg.faults
    leaf_counts = np.diff(bounds)
    incomplete = small & (leaf_counts <= cfg.faults)
    state.small[level] = small
    state.incomplete[level] = incomplete

    nearest = np.where(incomplete, level, NO_INC).astype(np.int64)
    if level > 0:
        child_net = tree.nets[level - 1]
        child_vals = state.nearest_inc[level - 1]
        owner = tree.parents[level - 1]
        pos = np.searchsorted(net, owner)
        best = np.full(len(net), NO_INC, dtype=np.int64)
        np.maximum.at(best, pos, child_vals)
        nearest = np.maximum(nearest, best)
    state.nearest_inc[level] = nearest

    trigger = nearest >= level - 5 * cfg.log_lam
    if trigger.any():
        cache = annulus_cache if annulus_cache is not None else {}
        a_pos, b_pos = _pairs_with_marked_witness(tree, level, cfg.lam, trigger, cache)
        if len(a_pos):
            store.add(level, net[a_pos], net[b_pos], TAG_INC)


@dataclass
class SpannerGraph:
    """Output spanner H plus audit metadata."""

    n: int
    eu: np.ndarray
    ev: np.ndarray
    ew: np.ndarray
    level: np.ndarray        # level at first insertion
    tag: np.ndarray          # provenance class at first insertion
    surrogates: dict[Node, tuple]
    complete_flags: dict[Node, bool]
    report: dict

    def graph(self) -> WeightedGraph:
        return WeightedGraph(self.n, self.eu, self.ev, self.ew)

    def max_degree(self) -> int:
        if len(self.eu) == 0:
            return 0
        return int(self.graph().degrees().max())

    def provenance_weights(self) -> dict[str, float]:
        out = {}
        for tag, name in TAG_NAMES.items():
            out[f"w_{name}"] = float(self.ew[self.tag == tag].sum())
        return out


class _SpannerBuilder:
    def __init__(self, n: int):
        self.n = n
        self.keys: set[int] = set()
        self.us: list[int] = []
        self.vs: list[int] = []
        self.levels: list[int] = []
        self.tags: list[int] = []

    def add(self, p: int, q: int, level: int, tag: int, state: ConstructionState) -> bool:
        if p == q:
            return False
        a, b = (p, q) if p < q else (q, p)
        key = a * self.n + b
        if key in self.keys:
            return False
        self.keys.add(key)
        self.us.append(a)
        self.vs.append(b)
        self.levels.append(level)
        self.tags.append(tag)
        state.bump_degree(a)
        state.bump_degree(b)
        return True


def build_ft_spanner(m: Metric, cfg: Config, light: WeightedGraph | None = None,
                     pairs=None) -> SpannerGraph:
    """Run the full construction and return H with its build report."""
    n = m.n
    if cfg.profile == "faithful" and cfg.faults > n - 2:
        raise InputError(f"faithful profile needs f <= n-2, got f={cfg.faults}, n={n}")
    if n == 1:
        report = _base_report(cfg, n, 0, 0.0, 0.0, 0, None, None,
                              surrogate.Counters())
        report.update({"estar_by_provenance": {v: 0 for v in TAG_NAMES.values()},
                       "h_edges": 0, "h_weight": 0.0, "max_degree": 0,
                       "degree_bound_2c3f": 2.0 * cfg.c3 * cfg.faults,
                       "lightness": 0.0})
        for name in TAG_NAMES.values():
            report[f"h_weight_{name}"] = 0.0
        empty = np.empty(0, np.int64)
        return SpannerGraph(1, empty, empty, np.empty(0), empty.astype(np.int16),
                            empty.astype(np.uint8), {}, {}, report)
    if pairs is None:
        pairs = sorted_pairs(m)
    if abs(pairs[2][0] - MIN_DISTANCE) > 1e-6 * MIN_DISTANCE:
        raise InputError("metric is not normalized (run normalize first)")

    tree = build_net_tree(m)
    _mst_graph, mst_weight = mst(m, pairs)
    g = light if light is not None else light_spanner(m, cfg.eps, pairs)
    annulus_cache: dict = {}
    store = phase1_collect(g, tree, cfg, annulus_cache)
    state = ConstructionState.fresh(tree, cfg)
    builder = _SpannerBuilder(n)

    def recorder(node, picked):
        state.surrogates[node] = tuple(picked)

    estar_per_level: dict[int, int] = {}
    h_per_level: dict[int, int] = {}
    f = cfg.faults
    for i in range(tree.zeta + 1):
        state.current_level = i
        mark_small_and_incomplete(tree, state, i, store, annulus_cache)
        state.mark_saturated_sweep()
        a_ids, b_ids, dists, tags = store.finalize(i, m)
        estar_per_level[i] = len(a_ids)
        added_here = 0
        for k in range(len(a_ids)):
            x = (int(a_ids[k]), i)
            y = (int(b_ids[k]), i)
            sx = surrogate.select(x, state, recorder)
            sy = surrogate.select(y, state, recorder)
            if state.events is not None:
                state.events.append(("edge", i, x, y, int(tags[k]),
                                     tuple(sx), tuple(sy)))
            if not sx or not sy:
                state.counters.surrogate_shortfalls += 1
                continue
            for p, q in bipartite_connection(sx, sy, f):
                if builder.add(p, q, i, int(tags[k]), state):
                    added_here += 1
        h_per_level[i] = added_here

    complete_flags = {node: state.is_complete(node) for node in state.surrogates}

    eu = np.asarray(builder.us, dtype=np.int64)
    ev = np.asarray(builder.vs, dtype=np.int64)
    ew = m.pair_distances(eu, ev) if len(eu) else np.empty(0)
    levels = np.asarray(builder.levels, dtype=np.int16)
    tags = np.asarray(builder.tags, dtype=np.uint8)

    report = _base_report(cfg, n, g.m, float(g.ew.sum()), mst_weight, tree.zeta,
                          estar_per_level, h_per_level, state.counters)
    report["estar_by_provenance"] = store.counts_by_tag()
    report["h_edges"] = int(len(eu))
    report["h_weight"] = float(ew.sum())
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, eu, 1)
    np.add.at(deg, ev, 1)
    report["max_degree"] = int(deg.max()) if n else 0
    report["degree_bound_2c3f"] = 2.0 * cfg.c3 * cfg.faults
    report["lightness"] = float(ew.sum() / mst_weight) if mst_weight > 0 else 0.0
    for tag, name in TAG_NAMES.items():
        report[f"h_weight_{name}"] = float(ew[tags == tag].sum())
    spanner = SpannerGraph(n, eu, ev, ew, levels, tags, dict(state.surrogates),
                           complete_flags, report)
    spanner._state = state  # kept for audits/diagnostics on this process
    spanner._tree = tree
    return spanner


def _base_report(cfg: Config, n: int, g_edges: int, g_weight: float,
                 mst_weight: float, zeta: int, estar_per_level, h_per_level,
                 counters: surrogate.Counters) -> dict:
    return {
        "n": n,
        "config": cfg.resolved(),
        "kernel_backend": kernels.BACKEND,
        "zeta": zeta,
        "g_edges": g_edges,
        "g_weight": g_weight,
        "mst_weight": mst_weight,
        "estar_per_level": {str(k): int(v) for k, v in (estar_per_level or {}).items()},
        "h_per_level": {str(k): int(v) for k, v in (h_per_level or {}).items()},
        "counters": counters.as_dict(),
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


@dataclass
class LnfForest:
    """Light net-forest: subgraph of T induced by incomplete nodes."""

    roots: list[Node]
    members: dict[Node, list[Node]]


def classify_lnf(tree: NetTree, state: ConstructionState) -> LnfForest:
    """Group incomplete nodes into subtrees; roots are the almost-complete
    nodes (incomplete with a complete parent, or incomplete at the top)."""
    roots: list[Node] = []
    members: dict[Node, list[Node]] = {}
    root_of: dict[Node, Node] = {}
    for level in range(tree.zeta, -1, -1):
        net = tree.nets[level]
        inc = state.incomplete[level]
        for pos, u in enumerate(net):
            if not inc[pos]:
                continue
            node = (int(u), level)
            parent_pt = tree.parent_point(int(u), level)
            parent = (parent_pt, level + 1) if parent_pt is not None else None
            if parent is not None and parent in root_of:
                root = root_of[parent]
            else:
                root = node
                roots.append(node)
                members[root] = []
            root_of[node] = root
            members[root].append(node)
    return LnfForest(roots=roots, members=members)
