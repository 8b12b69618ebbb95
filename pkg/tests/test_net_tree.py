import numpy as np
import pytest

from ftspan.baseline import mst
from ftspan.errors import InputError
from ftspan.metric import Metric, normalize
from ftspan.net_tree import (NetTree, build_net_tree, ceil_log5, check_invariants,
                             cross_set, dump_cross_edges, dump_nodes, radius)

from conftest import line_metric, uniform_metric


def brute_force_tree(m):
    """Independent re-derivation of the greedy nets and closest parents."""
    n = m.n
    lo, hi = m.min_max_distance()
    zeta = ceil_log5(hi)
    nets = [list(range(n))]
    i = 1
    while True:
        prev = nets[-1]
        r = 5.0 ** i
        chosen = []
        for u in prev:
            if all(m.distance(u, c) >= r for c in chosen):
                chosen.append(u)
        nets.append(chosen)
        if i >= zeta:
            if len(chosen) == 1:
                break
            zeta += 1
        i += 1
    parents = []
    for i in range(zeta):
        par = []
        for u in nets[i]:
            best = min(nets[i + 1], key=lambda c: (m.distance(u, c), c))
            par.append(best)
        parents.append(par)
    return zeta, nets, parents


@pytest.mark.parametrize("seed,n,dim", [(0, 25, 2), (1, 40, 2), (2, 30, 3), (3, 12, 1)])
def test_build_matches_brute_force(seed, n, dim):
    m = uniform_metric(n, dim=dim, seed=seed)
    t = build_net_tree(m)
    zeta, nets, parents = brute_force_tree(m)
    assert t.zeta == zeta
    for i in range(zeta + 1):
        assert t.nets[i].tolist() == sorted(nets[i])
    for i in range(zeta):
        order = np.argsort(nets[i])
        want = [parents[i][k] for k in order]
        assert t.parents[i].tolist() == want


def test_three_point_trace(three_line):
    t = build_net_tree(three_line)
    assert t.zeta == 5
    assert [net.tolist() for net in t.nets] == [
        [0, 1, 2], [0, 1, 2], [0, 1, 2], [0, 2], [0, 2], [0]]
    assert t.parent_point(1, 2) == 0  # closest level-3 point to 64 is 0


def test_single_point():
    t = build_net_tree(Metric(coords=np.zeros((1, 2))))
    assert t.zeta == 0 and t.nets[0].tolist() == [0]


def test_two_points_thin_at_level_3():
    m = line_metric(0.0, 1.0)
    t = build_net_tree(m)
    sizes = [len(net) for net in t.nets]
    assert sizes[0] == 2
    first_single = next(i for i, s in enumerate(sizes) if s == 1)
    assert first_single == 3  # 5^3 = 125 is the first radius above 64


def test_matrix_metric_tree():
    mat = np.array([[0.0, 64.0, 640.0], [64.0, 0.0, 576.0], [640.0, 576.0, 0.0]])
    m = Metric(matrix=mat)
    t = build_net_tree(m)
    check_invariants(t)
    assert t.zeta == 5


def test_exact_power_of_five_extends_to_single_root():
    m = line_metric(0.0, 64.0, 15625.0)  # max distance exactly 5^6
    assert m.scale_factor == 1.0
    t = build_net_tree(m)
    assert len(t.nets[-1]) == 1
    check_invariants(t)


def test_invariants_random_instances():
    for seed in range(3):
        check_invariants(build_net_tree(uniform_metric(60, seed=seed)))


def test_leaves_and_descendants(three_line):
    t = build_net_tree(three_line)
    assert t.leaves(0, 3).tolist() == [0, 1]
    assert t.leaves(2, 3).tolist() == [2]
    assert t.leaf_count(0, 5) == 3
    assert t.descendants_at(0, 3, 0).tolist() == [0, 1]
    assert t.ancestor(1, 3) == 0
    assert t.ancestor(1, 2) == 1


def test_cross_neighbors_example(three_line):
    t = build_net_tree(three_line)
    assert t.cross_neighbors((1, 0), 100.0) == [(0, 0)]
    # lambda below min distance ratio: empty
    assert t.cross_neighbors((1, 0), 0.5) == []


def test_cross_neighbors_packing_bound():
    m = uniform_metric(150, seed=5)
    t = build_net_tree(m)
    lam = 100.0
    for level in range(t.zeta + 1):
        for u in t.nets[level][:20]:
            nc = t.cross_neighbors((int(u), level), lam)
            assert len(nc) <= (4 * lam) ** 2


def test_cross_set_examples(three_line):
    t = build_net_tree(three_line)
    assert cross_set(t, [(0, 0), (1, 0)], 100.0) == [(0, 1, 0)]
    assert cross_set(t, [(0, 0)], 100.0) == []
    with pytest.raises(InputError):
        cross_set(t, [(0, 0), (0, 3)], 100.0)
    # three mutually-close nodes form a clique
    m = line_metric(0.0, 1.0, 2.0)
    t2 = build_net_tree(m)
    assert len(cross_set(t2, [(0, 0), (1, 0), (2, 0)], 200.0)) == 3


def test_aug_examples(three_line):
    t = build_net_tree(three_line)
    assert t.aug((1, 0), 0, 0, 100.0) == {(0, 1, 0)}
    # root with l=h=0: single net point at the top, no cross edges
    assert t.aug((0, 5), 0, 0, 10 ** 9) == set()
    # levels below 0 contribute nothing
    assert t.aug((1, 0), -3, -1, 100.0) == set()


def test_aug_descendant_side(three_line):
    t = build_net_tree(three_line)
    # from the root, level-0 descendants contribute their NC cliques
    got = t.aug((0, 5), -5, -5, 100.0)
    assert got == {(0, 1, 0)}


def test_original_cross_edge_examples(three_line):
    t = build_net_tree(three_line)
    assert t.original_cross_edge(0, 1, 100.0) == ((0, 0), (1, 0), 0)
    assert t.original_cross_edge(1, 2, 100.0) == ((1, 2), (2, 2), 2)
    assert t.original_cross_edge(0, 2, 10 ** 9)[2] == 0  # lambda >= spread
    with pytest.raises(InputError):
        t.original_cross_edge(1, 1, 100.0)


def test_monotone_cross_edge_property():
    # if (x, y) is a cross edge then every ancestor pair is one too
    m = uniform_metric(40, seed=8)
    t = build_net_tree(m)
    lam = 88.0
    for level in range(t.zeta):
        net = t.nets[level]
        block = m.dist_block(net, net)
        for a in range(len(net)):
            for b in range(a + 1, len(net)):
                if block[a, b] <= lam * radius(level):
                    for up in range(level + 1, t.zeta + 1):
                        xa = t.ancestor(int(net[a]), up)
                        xb = t.ancestor(int(net[b]), up)
                        assert m.distance(xa, xb) <= lam * radius(up)


def test_descendant_distance_bound_random_pairs():
    rng = np.random.default_rng(0)
    m = uniform_metric(80, seed=2)
    t = build_net_tree(m)
    for _ in range(2000):
        i = int(rng.integers(1, t.zeta + 1))
        j = int(rng.integers(0, i))
        q = int(rng.choice(t.nets[j]))
        anc = t.ancestor(q, i)
        assert m.distance(q, anc) <= 1.25 * radius(i) + 1e-9


def test_antichain_radius_sum_bounded_by_mst():
    # nodes with no ancestor-descendant relation: radius sum <= 20 w(MST)
    rng = np.random.default_rng(1)
    for seed in range(3):
        m = uniform_metric(60, seed=seed)
        t = build_net_tree(m)
        _, w = mst(m)
        for _ in range(50):
            picked = []
            used_leaves: set[int] = set()
            order = rng.permutation(t.zeta + 1)
            for level in order:
                for u in rng.permutation(t.nets[level]):
                    leaves = set(t.leaves(int(u), int(level)).tolist())
                    if leaves & used_leaves:
                        continue
                    picked.append((int(u), int(level)))
                    used_leaves |= leaves
            total = sum(radius(level) for _, level in picked)
            assert total <= 20.0 * w


def test_dumps(three_line):
    t = build_net_tree(three_line)
    nodes = dump_nodes(t)
    assert "0 0 0" in nodes.splitlines()[0]
    assert nodes.strip().splitlines()[-1] == "5 0 -1"
    ce = dump_cross_edges(t, [(0, 1, 0)])
    assert ce == "0 0 1 64.0\n"
