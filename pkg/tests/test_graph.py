import numpy as np
import pytest

from flatcoupling.errors import OrderingError
from flatcoupling.graph import (
    CouplingGraph,
    ancestors,
    build_graph,
    format_edges,
    info_set,
    k_hop_in_neighbors,
)
from flatcoupling.plant import ApproximateDownwashCoupling, DownwashCoupling, hover_state


def stacked(altitudes, xs=None, quad=None):
    altitudes = np.asarray(altitudes, dtype=float)
    xs = np.zeros_like(altitudes) if xs is None else np.asarray(xs, dtype=float)
    return hover_state(np.c_[xs, altitudes], np.zeros((len(altitudes), 2)), DownwashCoupling().quad)


def test_exact_edges_total_order():
    g = build_graph(stacked([3, 2, 1]), DownwashCoupling())
    assert g.edges == {(0, 1), (0, 2), (1, 2)}


def test_threshold_prunes_far_pairs():
    g = build_graph(stacked([3, 2, 1]), ApproximateDownwashCoupling((0.5, 1.5)))
    assert g.edges == {(0, 1), (1, 2)}


def test_edges_match_pairwise_predicate(rng):
    model = ApproximateDownwashCoupling((0.7, 1.2))
    for _ in range(30):
        n = 6
        x = stacked(rng.permutation(n) * 0.5 + rng.uniform(0, 0.2, n), rng.uniform(-1, 1, n))
        g = build_graph(x, model)
        expected = set()
        for j in range(n):
            for i in range(n):
                dx = x[j, 0, 0] - x[i, 0, 0]
                dy = x[j, 0, 1] - x[i, 0, 1]
                if dy > 0 and abs(dx) < 0.7 and abs(dy) < 1.2:
                    expected.add((j, i))
        assert g.edges == expected


def test_altitude_tie_is_an_ordering_error():
    with pytest.raises(OrderingError):
        build_graph(stacked([2, 2, 1]), DownwashCoupling())


def test_exact_model_rejects_edges_against_index_order():
    with pytest.raises(OrderingError):
        build_graph(stacked([1, 2]), DownwashCoupling())


def test_hops_on_chain():
    g = CouplingGraph(3, frozenset({(0, 1), (1, 2)}))
    assert k_hop_in_neighbors(g, 2, 0) == {2}
    assert k_hop_in_neighbors(g, 2, 1) == {1}
    assert k_hop_in_neighbors(g, 2, 2) == {0}


def test_hops_and_ancestors_match_fixtures(oracles):
    for rec in oracles["graphs"]:
        n = rec["n"]
        g = CouplingGraph(n, frozenset(tuple(e) for e in rec["edges"]))
        for i in range(n):
            for k, layer in enumerate(rec["hops"][str(i)]):
                assert k_hop_in_neighbors(g, i, k) == set(layer)
            assert ancestors(g, i) == set(rec["ancestors"][str(i)])


def test_ancestors_examples():
    assert ancestors(CouplingGraph(3), 1) == {1}
    g = build_graph(stacked([4, 3, 2, 1]), DownwashCoupling())
    assert ancestors(g, 3) == {0, 1, 2, 3}


def test_info_sets():
    g = build_graph(stacked([4, 3, 2, 1]), DownwashCoupling())
    for k in range(1, 6):
        assert info_set(g, 3, k, "none") == {3}
        assert info_set(g, 3, k, DownwashCoupling()) == {0, 1, 2, 3}


def test_strong_info_set_matches_bfs_union(oracles):
    for rec in oracles["graphs"]:
        n = rec["n"]
        g = CouplingGraph(n, frozenset(tuple(e) for e in rec["edges"]))
        for i in range(n):
            hops = rec["hops"][str(i)]
            for k in range(1, 6):
                expected = set().union(*(set(hops[h]) for h in range(min(k, len(hops)))))
                assert info_set(g, i, k, "strong") == expected


def test_monotonicity(oracles):
    for rec in oracles["graphs"]:
        n = rec["n"]
        g = CouplingGraph(n, frozenset(tuple(e) for e in rec["edges"]))
        for i in range(n):
            anc = ancestors(g, i)
            for k in range(n + 1):
                assert k_hop_in_neighbors(g, i, k) <= anc
                assert info_set(g, i, k + 1, "strong") <= info_set(g, i, k + 1, "lower")


def test_deterministic_and_formatted():
    x = stacked([3, 2, 1])
    a = build_graph(x, DownwashCoupling())
    b = build_graph(x.copy(), DownwashCoupling())
    assert a == b
    assert format_edges(a) == "1>2;1>3;2>3"
