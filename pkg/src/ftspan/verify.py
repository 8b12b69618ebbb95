"""Fault-injection stretch audits, degree/size/lightness audits, and oracles.

The stretch of a graph under a fault set F is the maximum over surviving
pairs of graph-distance / metric-distance, +inf when some surviving pair is
disconnected. Acceptance thresholds allow 1e-9 relative slack on path sums,
nothing more.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from ftspan import kernels
from ftspan.baseline import WeightedGraph
from ftspan.construct import Config, SpannerGraph
from ftspan.errors import BudgetError, InputError
from ftspan.metric import Metric, sorted_pairs

PATH_SUM_RTOL = 1e-9


def _as_graph(h) -> WeightedGraph:
    return h.graph() if isinstance(h, SpannerGraph) else h


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FTSPAN_THREADS", "1")))
    except ValueError:
        return 1


def stretch_under_faults(h, m: Metric, faults, dmat: np.ndarray | None = None):
    """Worst stretch of h with the fault set removed.

    Returns (ratio, witness_pair); ratio is +inf with a disconnected witness
    pair when the survivors are not mutually reachable. With fewer than two
    survivors the check is vacuous: (1.0, None).
    """
    g = _as_graph(h)
    faults = sorted(int(x) for x in faults)
    if len(set(faults)) != len(faults):
        raise InputError("duplicate points in fault set")
    blocked = np.zeros(g.n, dtype=np.uint8)
    for x in faults:
        if not 0 <= x < g.n:
            raise InputError(f"fault id {x} out of range")
        blocked[x] = 1
    if g.n - len(faults) < 2:
        return 1.0, None
    if dmat is None:
        dmat = m.full_matrix()
    indptr, nbrs, wts = g.csr()
    ratio, u, v = kernels.max_stretch(indptr, nbrs, wts, g.n, blocked, dmat)
    if u < 0:
        return 1.0, None
    return float(ratio), (int(u), int(v))


def stretch_passes(ratio: float, eps: float) -> bool:
    return ratio <= (1.0 + 5.0 * eps) * (1.0 + PATH_SUM_RTOL)


@dataclass
class FtVerdict:
    passed: bool
    worst_stretch: float
    worst_fault_set: tuple
    worst_pair: tuple | None
    fault_sets_checked: int

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_stretch": self.worst_stretch,
            "worst_fault_set": list(self.worst_fault_set),
            "worst_pair": list(self.worst_pair) if self.worst_pair else None,
            "fault_sets_checked": self.fault_sets_checked,
        }


def _run_fault_sets(h, m: Metric, eps: float, fault_sets) -> FtVerdict:
    g = _as_graph(h)
    dmat = m.full_matrix()
    indptr, nbrs, wts = g.csr()
    n = g.n

    def one(fs):
        blocked = np.zeros(n, dtype=np.uint8)
        blocked[list(fs)] = 1
        if n - len(fs) < 2:
            return 1.0, -1, -1
        return kernels.max_stretch(indptr, nbrs, wts, n, blocked, dmat)

    fault_sets = [tuple(sorted(int(x) for x in fs)) for fs in fault_sets]
    threads = _threads()
    if threads > 1 and len(fault_sets) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, fault_sets))
    else:
        results = [one(fs) for fs in fault_sets]

    worst = -1.0
    worst_fs: tuple = ()
    worst_pair = None
    for fs, (ratio, u, v) in zip(fault_sets, results):
        if ratio > worst:
            worst = float(ratio)
            worst_fs = fs
            worst_pair = (int(u), int(v)) if u >= 0 else None
    return FtVerdict(passed=stretch_passes(worst, eps), worst_stretch=worst,
                     worst_fault_set=worst_fs, worst_pair=worst_pair,
                     fault_sets_checked=len(fault_sets))


def exhaustive_ft_check(h, m: Metric, eps: float, f: int,
                        budget: int = 10 ** 6) -> FtVerdict:
    """Check every fault set of size at most f."""
    g = _as_graph(h)
    n = g.n
    total = sum(comb(n, k) for k in range(min(f, n) + 1))
    if total > budget:
        raise BudgetError(
            f"exhaustive check needs {total} fault sets (> {budget}); "
            "use sampled_ft_check")
    fault_sets = []
    for k in range(min(f, n) + 1):
        fault_sets.extend(combinations(range(n), k))
    return _run_fault_sets(h, m, eps, fault_sets)


def adversarial_fault_sets(h, f: int) -> list[tuple]:
    """S(x)-attack sets (truncated to the fault budget) and the top-degree set."""
    out = set()
    if isinstance(h, SpannerGraph):
        for node, surr in h.surrogates.items():
            if not h.complete_flags.get(node, False):
                continue
            fs = tuple(sorted(surr)[:f])
            if fs:
                out.add(fs)
    g = _as_graph(h)
    if g.n > f:
        deg = g.degrees()
        order = np.lexsort((np.arange(g.n), -deg))
        out.add(tuple(sorted(int(x) for x in order[:f])))
    return sorted(out)


def sampled_ft_check(h, m: Metric, eps: float, f: int, trials: int,
                     seed: int = 0) -> FtVerdict:
    """Random fault sets plus adversarial candidates.

    Adversarial sets attack the bipartite-connection argument (the fault set
    is drawn from a complete node's surrogate set) and the degree profile
    (the f highest-degree points). trials=0 runs only those.
    """
    if trials < 0:
        raise InputError("trials must be >= 0")
    g = _as_graph(h)
    n = g.n
    rng = np.random.default_rng(seed)
    fault_sets = list(adversarial_fault_sets(h, f))
    if n > f:
        for _ in range(trials):
            fault_sets.append(tuple(rng.choice(n, size=f, replace=False)))
    return _run_fault_sets(h, m, eps, fault_sets)


def greedy_ft_oracle(m: Metric, eps: float, f: int) -> WeightedGraph:
    """Fault-enumeration greedy: add (u, v) iff some fault set of size <= f
    leaves the current spanner with stretch > 1+eps between u and v.

    Exponential; enforced to n <= 14 and f <= 3. Output passes the
    exhaustive check by construction.
    """
    n = m.n
    if n > 14 or f > 3:
        raise BudgetError(f"oracle limited to n <= 14, f <= 3 (got n={n}, f={f})")
    pu, pv, pd = sorted_pairs(m)
    t = 1.0 + eps
    edges: list[tuple[int, int, float]] = []

    def current_csr():
        return WeightedGraph.from_edges(n, edges).csr()

    for k in range(len(pd)):
        u, v, d = int(pu[k]), int(pv[k]), float(pd[k])
        others = [x for x in range(n) if x != u and x != v]
        size = min(f, len(others))
        indptr, nbrs, wts = current_csr()
        needed = False
        for fs in combinations(others, size):
            blocked = np.zeros(n, dtype=np.uint8)
            blocked[list(fs)] = 1
            dist = kernels.sssp(indptr, nbrs, wts, n, u, blocked)
            if dist[v] > t * d:
                needed = True
                break
        if needed:
            edges.append((u, v, d))
    return WeightedGraph.from_edges(n, edges)


@dataclass
class AuditReport:
    """Structural audit of a built spanner against configured bounds."""

    n: int
    f: int
    eps: float
    edge_count: int
    max_degree: int
    min_degree: int
    degree_bound: float
    lightness: float
    lightness_bound: float
    size_ratio: float
    size_bound: float
    provenance_weights: dict
    mst_weight: float
    degree_ok: bool = field(init=False)
    size_ok: bool = field(init=False)
    lightness_ok: bool = field(init=False)

    def __post_init__(self):
        self.degree_ok = self.max_degree <= self.degree_bound
        self.size_ok = self.size_ratio <= self.size_bound
        self.lightness_ok = self.lightness <= self.lightness_bound

    def as_dict(self) -> dict:
        return dict(
            n=self.n, f=self.f, eps=self.eps, edge_count=self.edge_count,
            max_degree=self.max_degree, min_degree=self.min_degree,
            degree_bound=self.degree_bound, degree_ok=self.degree_ok,
            lightness=self.lightness, lightness_bound=self.lightness_bound,
            lightness_ok=self.lightness_ok, size_ratio=self.size_ratio,
            size_bound=self.size_bound, size_ok=self.size_ok,
            provenance_weights=self.provenance_weights,
            mst_weight=self.mst_weight,
        )

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def all_ok(self) -> bool:
        return self.degree_ok and self.size_ok and self.lightness_ok


def audits(spanner: SpannerGraph, m: Metric, cfg: Config,
           size_const: float = 64.0, light_const: float = 64.0) -> AuditReport:
    """Degree (exact 2 c3 f), size (<= size_const * f * n) and lightness
    (<= light_const * f^2) audits, plus provenance weights."""
    g = spanner.graph()
    deg = g.degrees()
    mst_weight = float(spanner.report.get("mst_weight", 0.0))
    lightness = g.weight() / mst_weight if mst_weight > 0 else 0.0
    return AuditReport(
        n=m.n, f=cfg.faults, eps=cfg.eps, edge_count=g.m,
        max_degree=int(deg.max()) if m.n else 0,
        min_degree=int(deg.min()) if m.n else 0,
        degree_bound=2.0 * cfg.c3 * cfg.faults,
        lightness=lightness,
        lightness_bound=light_const * cfg.faults ** 2,
        size_ratio=g.m / (cfg.faults * m.n) if m.n else 0.0,
        size_bound=size_const,
        provenance_weights=spanner.provenance_weights(),
        mst_weight=mst_weight,
    )
