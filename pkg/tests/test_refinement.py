import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import clique_union, random_graph
from szgraph.graph import ContractError, Graph
from szgraph.refinement import (
    DegenerateSplit,
    _redistribute,
    densification,
    partner_score,
    refine,
    select_partner,
    sort_by_internal_degree,
    sparsification,
    unzip,
)
from szgraph.regularity import EquitablePartition, check_all_pairs


def test_unzip_examples():
    a, b, rest = unzip([1, 2, 3, 4, 5, 6])
    assert list(a) == [1, 3, 5] and list(b) == [2, 4, 6] and len(rest) == 0
    a, b, rest = unzip([7, 8, 9])
    assert list(a) == [7] and list(b) == [8] and list(rest) == [9]


def test_sort_by_internal_degree_ties_by_id():
    g = Graph.from_edges(5, [(3, 0), (3, 1), (2, 4)])
    assert list(sort_by_internal_degree(g, [0, 1, 2, 3, 4])) == [3, 0, 1, 2, 4]


def test_partner_score_and_selection():
    assert partner_score(0.5, 0.2, 0.2) == 1.5
    assert partner_score(0.0, 1.0, 0.0) == 0.0
    # class 0..3 is a clique; 4..7 a clique joined to it; 8..11 edgeless
    w = np.zeros((12, 12))
    w[:8, :8] = 1
    np.fill_diagonal(w, 0)
    g = Graph(w)
    ci = [0, 1, 2, 3]
    assert select_partner(g, ci, [[8, 9, 10, 11], [4, 5, 6, 7]]) == 1
    # identical candidates: lowest index wins
    assert select_partner(g, [8, 9], [[10, 11], [10, 11]]) == 0
    with pytest.raises(ContractError):
        select_partner(g, ci, [])


def toy_split_graph():
    # certificate {0, 1}; pool vertex 4 touches 0, 5 touches 1, 2 and 3 are isolated
    return Graph.from_edges(6, [(0, 4), (1, 5)])


def test_densification_takes_best_connected_pool_vertices():
    g = toy_split_graph()
    h1, h2, rest = densification(g, [0, 1], [2, 3, 4, 5], 2)
    assert list(h1) == [0, 4] and list(h2) == [1, 5]
    assert sorted(rest) == [2, 3]


def test_densification_odd_vertex_rejoins_pool():
    g = clique_union([3, 3])
    h1, h2, rest = densification(g, [0, 1, 2], [3, 4, 5], 1)
    assert len(h1) == len(h2) == 1
    assert 2 in np.concatenate([h1, h2, rest])
    assert sorted(np.concatenate([h1, h2, rest])) == list(range(6))


def test_sparsification_takes_least_connected_pool_vertices():
    g = toy_split_graph()
    h1, h2, rest = sparsification(g, [0, 1], [2, 3, 4, 5], 2, np.random.default_rng(0))
    assert sorted(set(np.concatenate([h1, h2])) - {0, 1}) == [2, 3]
    assert sorted(rest) == [4, 5]
    assert {0, 1} <= set(np.concatenate([h1, h2]))


def test_split_with_short_pool_is_degenerate():
    g = toy_split_graph()
    with pytest.raises(DegenerateSplit):
        densification(g, [0, 1], [2], 2)
    with pytest.raises(DegenerateSplit):
        sparsification(g, [0, 1], [2], 2, np.random.default_rng(0))
    with pytest.raises(ContractError):
        densification(g, [0, 1], [1, 2], 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 12), st.integers(1, 8), st.integers(0, 10_000), st.booleans())
def test_split_outputs_partition_cert_and_pool(c, extra, target, seed, dense):
    n = c + extra + 2 * target
    g = random_graph(n, 0.4, seed)
    perm = np.random.default_rng(seed).permutation(n)
    cert, pool = perm[:c], perm[c:]
    if dense:
        h1, h2, rest = densification(g, cert, pool, target)
    else:
        h1, h2, rest = sparsification(g, cert, pool, target, np.random.default_rng(seed))
    assert len(h1) == len(h2) == target
    allv = np.concatenate([h1, h2, rest])
    assert sorted(allv) == list(range(n))


def test_redistribute_deals_round_robin_and_trims():
    g = Graph.from_edges(7, [])
    out, rest = _redistribute(g, [np.array([0, 1]), np.array([2, 3])], np.array([4, 5, 6]))
    assert [list(c) for c in out] == [[0, 1, 4], [2, 3, 5]]
    assert list(rest) == [6]


def partition(n, k, seed):
    perm = np.random.default_rng(seed).permutation(n)
    m = n // k
    return EquitablePartition([perm[i * m:(i + 1) * m] for i in range(k)], perm[k * m:], n, 0.5)


def test_refine_all_regular_unzips_every_class():
    g = Graph(np.ones((40, 40)) - np.eye(40))
    p = partition(40, 4, 1)
    verdicts = check_all_pairs(g, p, 0.5)
    assert all(v.regular for v in verdicts.values())
    out = refine(g, p, verdicts)
    assert out.regular and out.partition.k == 8 and out.partition.m == 5


def test_refine_contract():
    g = random_graph(20, 0.5)
    p = partition(20, 4, 0)
    with pytest.raises(ContractError):
        refine(g, p, {})


@settings(max_examples=25, deadline=None)
@given(st.integers(24, 120), st.sampled_from([2, 4, 6]), st.floats(0.05, 0.9),
       st.floats(0.3, 0.9), st.integers(0, 10_000))
def test_refine_preserves_vertex_set_and_halves_classes(n, k, p, eps, seed):
    g = random_graph(n, p, seed)
    part = partition(n, k, seed + 1)
    verdicts = check_all_pairs(g, part, eps)
    out = refine(g, part, verdicts, rng=np.random.default_rng(seed))
    q = out.partition
    # EquitablePartition itself rejects lost or duplicated vertices
    assert q.n == n
    if q.k:
        assert q.m == part.m // 2
    if not out.degenerate:
        assert q.k == 2 * k
    again = refine(g, part, verdicts, rng=np.random.default_rng(seed))
    assert [list(c) for c in again.partition.classes] == [list(c) for c in q.classes]
