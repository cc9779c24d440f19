import random
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calnet.errors import UndefinedMetricError
from calnet.metrics import (
    connectivity,
    degree_correlation,
    degrees,
    heterogeneity,
    node_correlation_similarity,
)
from calnet.netgraph import NetTradeNetwork
from conftest import bipartite, cycle, net, networks, random_network


def pearson_or_zero(x, y):
    try:
        return statistics.correlation(x, y)
    except statistics.StatisticsError:
        return 0.0


def brute_rowrow(g, weighted):
    nodes = g.nodes
    val = (lambda w: w) if weighted else (lambda w: 1.0 if w > 0 else 0.0)
    prof = {i: [val(g.weight(k, i)) for k in nodes] for i in nodes}
    rs = [pearson_or_zero(prof[i], prof[j]) for i in nodes for j in nodes if i != j]
    return sum(rs) / len(rs)


def brute_inout(g, weighted):
    nodes = g.nodes
    val = (lambda w: w) if weighted else (lambda w: 1.0 if w > 0 else 0.0)
    rs = [
        pearson_or_zero([val(g.weight(k, i)) for k in nodes], [val(g.weight(i, k)) for k in nodes])
        for i in nodes
    ]
    return sum(rs) / len(rs)


def test_degrees_cycle():
    d = degrees(cycle(3))
    assert list(d.k_in) == list(d.k_out) == [1, 1, 1]
    assert list(d.s_in) == list(d.s_out) == [1.0, 1.0, 1.0]


def test_degrees_star():
    g = net({("H", "a"): 2.0, ("H", "b"): 2.0, ("H", "c"): 2.0})
    d = degrees(g)
    assert d.row("H") == (0, 3, 0.0, 6.0)
    for leaf in "abc":
        assert d.row(leaf) == (1, 0, 2.0, 0.0)


def test_degrees_empty():
    d = degrees(net({}, nodes=list("abcde")))
    assert d.k_in.sum() == d.k_out.sum() == 0
    assert d.s_in.sum() == d.s_out.sum() == 0


@given(networks())
def test_handshake_identities(g):
    d = degrees(g)
    assert d.k_in.sum() == d.k_out.sum() == g.n_edges
    assert d.s_in.sum() == pytest.approx(g.total_weight, rel=1e-9)
    assert d.s_out.sum() == pytest.approx(g.total_weight, rel=1e-9)
    assert list(d.s_in > 0) == list(d.k_in > 0)
    assert list(d.s_out > 0) == list(d.k_out > 0)


def test_connectivity_examples():
    assert connectivity(cycle(3)) == 0.5
    assert connectivity(net({}, nodes=[str(i) for i in range(10)])) == 0
    with pytest.raises(UndefinedMetricError):
        connectivity(net({}, nodes=["a"]))


@given(networks())
def test_connectivity_bound(g):
    c = connectivity(g)
    assert 0 <= c <= 0.5
    n = g.n_nodes
    assert (c == 0.5) == (g.n_edges == n * (n - 1) // 2)


def test_heterogeneity_examples():
    assert heterogeneity(cycle(3)) == 0
    assert heterogeneity(cycle(3), weighted=True) == 0
    g = bipartite(2, 2)
    assert heterogeneity(g) == 1.0
    with pytest.raises(UndefinedMetricError):
        heterogeneity(net({}, nodes=["a", "b"]))
    with pytest.raises(UndefinedMetricError):
        heterogeneity(net({}, nodes=["a", "b"]), weighted=True)


def test_heterogeneity_range_on_random_networks():
    rng = random.Random(2024)
    for _ in range(1000):
        g = random_network(rng, rng.randint(2, 12), p=rng.uniform(0.1, 1.0))
        if g.n_edges == 0:
            continue
        for weighted in (False, True):
            assert 0.0 <= heterogeneity(g, weighted) <= 1.0


def test_degree_correlation_examples():
    # two disjoint balanced cycles of different weight: s_in == s_out everywhere
    edges = {("A", "B"): 1.0, ("B", "C"): 1.0, ("C", "A"): 1.0,
             ("D", "E"): 2.0, ("E", "F"): 2.0, ("F", "D"): 2.0}
    assert degree_correlation(net(edges)) == pytest.approx(1.0, abs=1e-15)
    # (s_out, s_in) = (2,0),(2,0),(0,2),(0,2): hand Pearson gives -4/sqrt(4*4) = -1
    assert degree_correlation(bipartite(2, 2)) == -1.0
    with pytest.raises(UndefinedMetricError):
        degree_correlation(cycle(4))


def test_node_correlation_identical_importers():
    # X and Y import the same profile from the same three exporters
    edges = {}
    for k, w in zip("abc", (1.0, 2.0, 3.0)):
        edges[(k, "X")] = w
        edges[(k, "Y")] = w
    g = net(edges)
    nodes = g.nodes
    prof = {i: [g.weight(k, i) for k in nodes] for i in nodes}
    assert statistics.correlation(prof["X"], prof["Y"]) == pytest.approx(1.0)
    assert node_correlation_similarity(g) == pytest.approx(brute_rowrow(g, True), abs=1e-12)


def test_node_correlation_needs_two_nodes():
    with pytest.raises(UndefinedMetricError):
        node_correlation_similarity(net({}, nodes=["a"]))
    with pytest.raises(ValueError):
        node_correlation_similarity(cycle(3), variant="bogus")


def test_node_correlation_zero_rows_count_as_zero():
    g = net({}, nodes=["a", "b", "c"])
    assert node_correlation_similarity(g) == 0.0
    assert node_correlation_similarity(g, variant="in-out-self") == 0.0


@settings(max_examples=60)
@given(networks(), st.booleans())
def test_node_correlation_matches_brute_force(g, weighted):
    assert node_correlation_similarity(g, weighted) == pytest.approx(brute_rowrow(g, weighted), abs=1e-9)
    assert node_correlation_similarity(g, weighted, "in-out-self") == pytest.approx(
        brute_inout(g, weighted), abs=1e-9
    )


@given(networks(min_edges=1), st.sampled_from([1e-3, 0.5, 7.0, 1e3]))
def test_scale_invariance(g, lam):
    s = g.scaled(lam)
    assert heterogeneity(s, True) == pytest.approx(heterogeneity(g, True), abs=1e-12)
    assert heterogeneity(s) == heterogeneity(g)
    assert connectivity(s) == connectivity(g)
    for variant in ("row-row", "in-out-self"):
        assert node_correlation_similarity(s, True, variant) == pytest.approx(
            node_correlation_similarity(g, True, variant), abs=1e-12
        )
    try:
        ref = degree_correlation(g)
    except UndefinedMetricError:
        return
    assert degree_correlation(s) == pytest.approx(ref, abs=1e-12)


@given(networks(min_edges=1), st.randoms(use_true_random=False))
def test_permutation_invariance(g, rnd):
    names = list(g.nodes)
    shuffled = names[:]
    rnd.shuffle(shuffled)
    relabel = dict(zip(names, [f"X{n}" for n in shuffled]))
    h = NetTradeNetwork(g.year, tuple(sorted(relabel.values())),
                        {(relabel[u], relabel[v]): w for (u, v), w in g.edges.items()})
    assert connectivity(h) == connectivity(g)
    assert heterogeneity(h) == heterogeneity(g)
    assert heterogeneity(h, True) == heterogeneity(g, True)
    for weighted in (False, True):
        assert node_correlation_similarity(h, weighted) == pytest.approx(
            node_correlation_similarity(g, weighted), abs=1e-12
        )
