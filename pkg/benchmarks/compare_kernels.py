#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Both backends implement identical algorithms; this script measures wall
time for the two hot paths (path-greedy spanner construction and the
all-sources stretch audit) and double-checks that the outputs match.

Usage: python benchmarks/compare_kernels.py [--sizes 128,256,512] [--seed 0]
"""

import argparse
import time

import numpy as np

from ftspan import kernels
from ftspan.baseline import WeightedGraph
from ftspan.gen import instance
from ftspan.metric import normalize, sorted_pairs


def time_backend(backend, m, pairs):
    pu, pv, pd = pairs
    t0 = time.perf_counter()
    eu, ev = backend.greedy_spanner(m.n, pu, pv, pd, 1.1)
    t_greedy = time.perf_counter() - t0
    ew = m.pair_distances(eu.astype(np.int64), ev.astype(np.int64))
    g = WeightedGraph(m.n, eu, ev, ew)
    indptr, nbrs, wts = g.csr()
    dmat = m.full_matrix()
    blocked = np.zeros(m.n, dtype=np.uint8)
    t0 = time.perf_counter()
    ratio, u, v = backend.max_stretch(indptr, nbrs, wts, m.n, blocked, dmat)
    t_stretch = time.perf_counter() - t0
    return t_greedy, t_stretch, (eu.tolist(), ev.tolist(), ratio)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="128,256,512")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = {"python": kernels.get_backend("python")}
    try:
        backends["compiled"] = kernels.get_backend("compiled")
    except ImportError:
        print("compiled backend not built; benchmarking python only")

    print(f"{'n':>6} {'backend':>9} {'greedy_s':>10} {'stretch_s':>10} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        m = normalize(instance("uniform", n, 2, seed=args.seed))
        pairs = sorted_pairs(m)
        results = {}
        for name, backend in backends.items():
            tg, ts, out = time_backend(backend, m, pairs)
            results[name] = (tg, ts, out)
        if len(results) == 2:
            assert results["python"][2] == results["compiled"][2], \
                "backends disagree"
        base = results["python"][0] + results["python"][1]
        for name, (tg, ts, _) in results.items():
            speedup = base / (tg + ts)
            print(f"{n:>6} {name:>9} {tg:>10.4f} {ts:>10.4f} {speedup:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
