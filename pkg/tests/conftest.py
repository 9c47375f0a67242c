import numpy as np
import pytest

from rwalk.graph import Graph, build_ring


@pytest.fixture
def ring5():
    return build_ring(5)


@pytest.fixture
def trap_lipschitz():
    """The five-node entrapment example: one node 100x heavier."""
    return np.array([100.0, 1.0, 1.0, 1.0, 1.0])


def star(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def stationary_oracle(p: np.ndarray) -> np.ndarray:
    """Solve pi (P - I) = 0, sum(pi) = 1 directly."""
    n = p.shape[0]
    lhs = np.vstack([(p - np.eye(n)).T, np.ones(n)])
    rhs = np.r_[np.zeros(n), 1.0]
    pi, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return pi
