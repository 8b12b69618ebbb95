import numpy as np
import pytest

from ftspan.baseline import WeightedGraph, light_spanner, mst, shortest_dist
from ftspan.construct import Config, build_ft_spanner
from ftspan.errors import BudgetError
from ftspan.verify import (adversarial_fault_sets, audits, exhaustive_ft_check,
                           greedy_ft_oracle, sampled_ft_check,
                           stretch_under_faults)

from conftest import line_metric, uniform_metric


def complete_graph(m):
    edges = [(u, v, m.distance(u, v))
             for u in range(m.n) for v in range(u + 1, m.n)]
    return WeightedGraph.from_edges(m.n, edges)


def test_stretch_complete_graph_is_one(three_line):
    g = complete_graph(three_line)
    ratio, _ = stretch_under_faults(g, three_line, [])
    assert ratio == 1.0
    ratio, _ = stretch_under_faults(g, three_line, [1])
    assert ratio == 1.0


def test_stretch_path_midpoint_fault(short_line):
    g = WeightedGraph.from_edges(3, [(0, 1, 64.0), (1, 2, 64.0)])
    ratio, pair = stretch_under_faults(g, short_line, [1])
    assert ratio == np.inf and pair == (0, 2)


def test_stretch_vacuous_when_too_few_survivors(short_line):
    g = WeightedGraph.from_edges(3, [])
    ratio, pair = stretch_under_faults(g, short_line, [0, 1])
    assert ratio == 1.0 and pair is None


def test_stretch_built_spanner_no_faults():
    m = uniform_metric(10, seed=3)
    sp = build_ft_spanner(m, Config(eps=0.1, faults=1))
    ratio, _ = stretch_under_faults(sp, m, [])
    assert ratio <= 1 + 5 * 0.1


def test_per_pair_deletion_monotonicity():
    # removing vertices can only increase distances between survivors
    m = uniform_metric(14, seed=5)
    sp = build_ft_spanner(m, Config(eps=0.1, faults=2))
    g = sp.graph()
    rng = np.random.default_rng(0)
    for _ in range(10):
        fs = sorted(int(x) for x in rng.choice(m.n, size=2, replace=False))
        alive = [u for u in range(m.n) if u not in fs]
        for u in alive[:5]:
            base = shortest_dist(g, u)
            cut = shortest_dist(g, u, fs)
            assert (cut[alive] >= base[alive] - 1e-12).all()


def test_exhaustive_small_complete_passes(three_line):
    g = complete_graph(three_line)
    v = exhaustive_ft_check(g, three_line, 0.3, 1)
    assert v.passed and v.fault_sets_checked == 4  # {}, {0}, {1}, {2}


def test_exhaustive_n2_f0():
    m = line_metric(0.0, 1.0)
    with_edge = WeightedGraph.from_edges(2, [(0, 1, 64.0)])
    without = WeightedGraph.from_edges(2, [])
    assert exhaustive_ft_check(with_edge, m, 0.1, 0).passed
    assert not exhaustive_ft_check(without, m, 0.1, 0).passed


def test_exhaustive_missing_bypass_fails_with_witness(short_line):
    g = WeightedGraph.from_edges(3, [(0, 1, 64.0), (1, 2, 64.0)])
    v = exhaustive_ft_check(g, short_line, 0.1, 1)
    assert not v.passed
    assert v.worst_fault_set == (1,) and v.worst_pair == (0, 2)


def test_exhaustive_budget():
    m = uniform_metric(40, seed=0)
    g = complete_graph(m)
    with pytest.raises(BudgetError):
        exhaustive_ft_check(g, m, 0.1, 4, budget=10 ** 4)


def test_sampled_trials_zero_runs_attacks():
    m = uniform_metric(20, seed=2)
    sp = build_ft_spanner(m, Config(eps=0.1, faults=1))
    v = sampled_ft_check(sp, m, 0.1, 1, trials=0)
    assert v.fault_sets_checked == len(adversarial_fault_sets(sp, 1))
    assert v.fault_sets_checked >= 1


def test_sampled_deterministic_by_seed():
    m = uniform_metric(20, seed=2)
    sp = build_ft_spanner(m, Config(eps=0.1, faults=2))
    a = sampled_ft_check(sp, m, 0.1, 2, trials=50, seed=9)
    b = sampled_ft_check(sp, m, 0.1, 2, trials=50, seed=9)
    assert a.as_dict() == b.as_dict()


def test_sampled_complete_graph_stretch_one():
    m = uniform_metric(12, seed=4)
    g = complete_graph(m)
    v = sampled_ft_check(g, m, 0.05, 2, trials=30, seed=1)
    assert v.worst_stretch == 1.0


def test_attack_sets_respect_budget():
    m = uniform_metric(15, seed=6)
    sp = build_ft_spanner(m, Config(eps=0.1, faults=2))
    for fs in adversarial_fault_sets(sp, 2):
        assert 1 <= len(fs) <= 2


def test_oracle_f0_matches_path_greedy():
    m = uniform_metric(10, seed=1)
    oracle = greedy_ft_oracle(m, 0.15, 0)
    greedy = light_spanner(m, 0.15)
    assert oracle.edge_set() == greedy.edge_set()


def test_oracle_n2_f1():
    m = line_metric(0.0, 1.0)
    oracle = greedy_ft_oracle(m, 0.1, 1)
    assert oracle.edge_set() == {(0, 1)}


def test_oracle_min_degree_f_plus_one():
    m = uniform_metric(9, seed=7)
    for f in (1, 2):
        oracle = greedy_ft_oracle(m, 0.1, f)
        assert oracle.degrees().min() >= f + 1
        assert exhaustive_ft_check(oracle, m, 0.1, f).passed


def test_oracle_budget():
    with pytest.raises(BudgetError):
        greedy_ft_oracle(uniform_metric(15, seed=0), 0.1, 1)
    with pytest.raises(BudgetError):
        greedy_ft_oracle(uniform_metric(10, seed=0), 0.1, 4)


def test_audits_fields_and_reproducibility():
    m = uniform_metric(24, seed=8)
    cfg = Config(eps=0.1, faults=2)
    sp = build_ft_spanner(m, cfg)
    a = audits(sp, m, cfg)
    b = audits(sp, m, cfg)
    assert a.as_dict() == b.as_dict()
    assert a.degree_ok and np.isfinite(a.lightness)
    assert a.max_degree == sp.max_degree()
    assert a.min_degree >= cfg.faults + 1  # lower-bound sanity, n >= f+2
    # verdicts recomputable from raw fields
    assert a.degree_ok == (a.max_degree <= a.degree_bound)
    assert a.size_ok == (a.size_ratio <= a.size_bound)


def test_audit_star_max_degree():
    m = uniform_metric(4, seed=3)
    star = WeightedGraph.from_edges(
        4, [(0, v, m.distance(0, v)) for v in range(1, 4)])
    assert int(star.degrees().max()) == 3


def test_h_passes_exhaustive_alongside_oracle():
    # oracle agreement: both H and the oracle pass on the same instance
    for seed in range(3):
        m = uniform_metric(9, seed=seed)
        f = 1 + seed % 2
        sp = build_ft_spanner(m, Config(eps=0.1, faults=f))
        oracle = greedy_ft_oracle(m, 0.1, f)
        assert exhaustive_ft_check(sp, m, 0.1, f).passed
        assert exhaustive_ft_check(oracle, m, 0.1, f).passed
        if m.n >= f + 2:
            assert sp.graph().degrees().min() >= f + 1
            assert oracle.degrees().min() >= f + 1
