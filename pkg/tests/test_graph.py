import numpy as np
import pytest

from ds_consensus.dst import BodyOfEvidence, Frame
from ds_consensus.errors import FrameMismatch, NodeOutOfRange
from ds_consensus.graph import (DirectedGraph, erdos_renyi, erdos_renyi_connected,
                                in_component, is_connected, neighbors, out_component,
                                prune)

from conftest import random_general_boe


def bayes(frame, x):
    m = np.zeros(frame.n_subsets)
    m[1] = x
    m[2] = (1 - x) / 2
    m[4] = (1 - x) / 2
    return BodyOfEvidence(frame, m)


def test_neighbors_directionality():
    g = DirectedGraph.from_edges(2, [(1, 2)])  # 1 receives from 2
    assert neighbors(g, 1) == {2}
    assert neighbors(g, 2) == set()
    with pytest.raises(NodeOutOfRange):
        neighbors(g, 3)


def test_neighbors_complete_graph():
    g = DirectedGraph.from_mutual_pairs(3, [(1, 2), (1, 3), (2, 3)])
    assert neighbors(g, 1) == {2, 3}


def test_no_self_loops():
    with pytest.raises(ValueError):
        DirectedGraph.from_edges(2, [(1, 1)])


def test_components_chain():
    # 1 feeds 2 feeds 3
    g = DirectedGraph.from_edges(3, [(2, 1), (3, 2)])
    assert out_component(g, 1) == {1, 2, 3}
    assert in_component(g, 1) == {1}
    assert in_component(g, 3) == {1, 2, 3}


def test_components_isolated():
    g = DirectedGraph.from_edges(3, [(2, 1)])
    assert out_component(g, 3) == {3}
    assert in_component(g, 3) == {3}


def test_components_duality(rng):
    for trial in range(10):
        n = int(rng.integers(2, 15))
        g = erdos_renyi(n, 0.3, int(rng.integers(0, 10_000)))
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                assert (i in out_component(g, j)) == (j in in_component(g, i))


def test_prune_epsilon_one_keeps_everything(rng):
    frame = Frame(3)
    g = DirectedGraph.from_mutual_pairs(4, [(1, 2), (2, 3), (3, 4), (1, 4)])
    opinions = [random_general_boe(frame, rng) for _ in range(4)]
    view = prune(g, opinions, [1.0] * 4)
    assert view.edges == g.edges


def test_prune_epsilon_zero_distinct_opinions():
    frame = Frame(3)
    g = DirectedGraph.from_mutual_pairs(3, [(1, 2), (2, 3)])
    opinions = [bayes(frame, x) for x in (0.2, 0.5, 0.8)]
    view = prune(g, opinions, [0.0] * 3)
    assert view.edges == frozenset()


def test_prune_monotone_in_epsilon(rng):
    frame = Frame(3)
    g = DirectedGraph.from_mutual_pairs(5, [(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)])
    opinions = [random_general_boe(frame, rng) for _ in range(5)]
    eps = rng.uniform(0, 1, size=5)
    small = prune(g, opinions, eps)
    large = prune(g, opinions, np.minimum(eps + 0.2, 1.0))
    assert small.edges <= large.edges


def test_prune_asymmetric_bounds():
    frame = Frame(3)
    g = DirectedGraph.from_mutual_pairs(2, [(1, 2)])
    opinions = [bayes(frame, 0.2), bayes(frame, 0.8)]
    view = prune(g, opinions, [1.0, 0.1])
    assert (1, 2) in view.edges and (2, 1) not in view.edges


def test_prune_frame_mismatch():
    g = DirectedGraph.from_mutual_pairs(2, [(1, 2)])
    a = bayes(Frame(3), 0.5)
    b = BodyOfEvidence(Frame(2), np.array([0.0, 1.0, 0.0, 0.0]))
    with pytest.raises(FrameMismatch):
        prune(g, [a, b], [1.0, 1.0])


def test_erdos_renyi_extremes():
    assert erdos_renyi(5, 0.0, 1).edges == frozenset()
    full = erdos_renyi(5, 1.0, 1)
    assert len(full.edges) == 5 * 4


def test_erdos_renyi_reproducible():
    assert erdos_renyi(30, 0.2, 42).edges == erdos_renyi(30, 0.2, 42).edges
    assert erdos_renyi(30, 0.2, 42).edges != erdos_renyi(30, 0.2, 43).edges


def test_erdos_renyi_connected_screening():
    g = erdos_renyi_connected(100, 0.10, 1)
    assert g.n == 100 and is_connected(g)


def test_is_connected_cases():
    assert is_connected(DirectedGraph.from_edges(1, []))
    assert not is_connected(DirectedGraph.from_edges(2, []))
    assert is_connected(DirectedGraph.from_mutual_pairs(3, [(1, 2), (2, 3)]))


def test_graph_json_round_trip():
    g = DirectedGraph.from_mutual_pairs(4, [(1, 2), (3, 4)])
    back = DirectedGraph.from_dict(g.to_dict())
    assert back == DirectedGraph(back.n, g.edges)
    assert g.to_dict() == {"n": 4, "edges": [[1, 2], [3, 4]]}
