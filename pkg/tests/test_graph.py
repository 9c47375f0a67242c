import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwalk.errors import ConstructionFailure, InvalidParameter
from rwalk.graph import (Graph, build_erdos_renyi, build_grid2d, build_ring, build_watts_strogatz,
                         is_connected)
import rwalk.graph as graph_mod


def assert_valid(g: Graph):
    for v, nbrs in enumerate(g.adjacency):
        assert v not in nbrs
        assert len(set(nbrs)) == len(nbrs)
        for u in nbrs:
            assert v in g.adjacency[u]
    assert is_connected(g.adjacency)


def test_ring_adjacency():
    assert build_ring(5).neighbors(0) == (1, 4)
    assert build_ring(3).neighbors(0) == (1, 2)
    g = build_ring(5)
    assert all(g.degree(v) == 2 for v in range(5))
    assert g.num_edges == 5


def test_ring_rejects_small():
    with pytest.raises(InvalidParameter):
        build_ring(2)


def test_grid_degrees():
    assert list(build_grid2d(2, 2).degrees) == [2, 2, 2, 2]
    g = build_grid2d(3, 3)
    assert g.degree(4) == 4 and g.degree(0) == 2 and g.degree(1) == 3
    line = build_grid2d(1, 5)
    assert line.adjacency == ((1,), (0, 2), (1, 3), (2, 4), (3,))
    with pytest.raises(InvalidParameter):
        build_grid2d(1, 1)


@pytest.mark.parametrize("rows,cols", [(2, 2), (3, 4), (1, 7), (5, 5)])
def test_grid_edge_count(rows, cols):
    assert build_grid2d(rows, cols).num_edges == 2 * rows * cols - rows - cols


def test_erdos_renyi_forced_edge():
    assert build_erdos_renyi(2, 1.0, seed=3).edges() == [(0, 1)]


def test_erdos_renyi_deterministic():
    a = build_erdos_renyi(60, 0.1, seed=11)
    b = build_erdos_renyi(60, 0.1, seed=11)
    assert a.to_text() == b.to_text()
    assert_valid(a)


@pytest.mark.slow
def test_erdos_renyi_mean_degree():
    for seed in range(10):
        g = build_erdos_renyi(1000, 0.1, seed)
        assert abs(g.degrees.mean() - 99.9) / 99.9 < 0.05


def test_erdos_renyi_retry_budget(monkeypatch):
    monkeypatch.setattr(graph_mod, "CONNECT_RETRIES", 3)
    with pytest.raises(ConstructionFailure) as info:
        build_erdos_renyi(200, 0.001, seed=0)
    assert info.value.attempts == 3


def test_watts_strogatz_lattice():
    g = build_watts_strogatz(12, 4, 0.0, seed=0)
    assert all(g.degree(v) == 4 for v in range(12))
    assert g.neighbors(0) == (1, 2, 10, 11)


def test_watts_strogatz_large():
    g = build_watts_strogatz(1000, 4, 0.1, seed=5)
    assert g.num_edges == 2000
    assert g.degrees.mean() == 4.0
    assert build_watts_strogatz(1000, 4, 0.1, seed=5).to_text() == g.to_text()
    assert_valid(g)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(5, 40), half_k=st.integers(1, 2), beta=st.floats(0, 1), seed=st.integers(0, 10**6))
def test_watts_strogatz_properties(n, half_k, beta, seed):
    k = 2 * half_k
    g = build_watts_strogatz(n, k, beta, seed)
    assert_valid(g)
    assert g.num_edges == n * k // 2


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), p=st.floats(0.2, 1.0), seed=st.integers(0, 10**6))
def test_erdos_renyi_properties(n, p, seed):
    assert_valid(build_erdos_renyi(n, p, seed))


def test_edge_list_round_trip(tmp_path):
    g = build_watts_strogatz(30, 4, 0.3, seed=9)
    g.save(tmp_path / "g.txt")
    text = (tmp_path / "g.txt").read_text()
    assert text.startswith("# nodes=30 generator=watts_strogatz:n=30,k=4,beta=0.3 seed=9\n")
    h = Graph.load(tmp_path / "g.txt")
    assert h == g


def test_rejects_disconnected_and_asymmetric():
    with pytest.raises(InvalidParameter):
        Graph.from_edges(4, [(0, 1), (2, 3)])
    with pytest.raises(InvalidParameter):
        Graph(2, ((1,), ()))


def test_single_node_graph():
    g = Graph.from_edges(1, [])
    assert g.degree(0) == 0
