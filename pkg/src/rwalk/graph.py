"""Undirected communication graphs and their seeded generators.

Nodes are the dense integers ``0..n-1``.  Adjacency lists hold distinct
non-self neighbours in ascending order; self-loop mass only ever appears
as the Metropolis-Hastings residual in :mod:`rwalk.transition`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import ConstructionFailure, InvalidParameter

CONNECT_RETRIES = 100


@dataclass(frozen=True)
class Graph:
    n: int
    adjacency: tuple[tuple[int, ...], ...]
    generator_tag: str = "custom"
    seed: int | None = None

    def __post_init__(self):
        if self.n < 1 or len(self.adjacency) != self.n:
            raise InvalidParameter("adjacency must have one entry per node")
        for v, nbrs in enumerate(self.adjacency):
            if v in nbrs:
                raise InvalidParameter(f"self-loop stored at node {v}")
            if list(nbrs) != sorted(set(nbrs)):
                raise InvalidParameter(f"adjacency of {v} not sorted/distinct")
            for u in nbrs:
                if not 0 <= u < self.n or v not in self.adjacency[u]:
                    raise InvalidParameter(f"edge ({v}, {u}) is not symmetric")
        if self.n > 1 and not is_connected(self.adjacency):
            raise InvalidParameter("graph is not connected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]],
                   generator_tag: str = "custom", seed: int | None = None) -> "Graph":
        sets = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                continue
            sets[u].add(v)
            sets[v].add(u)
        return cls(n, tuple(tuple(sorted(s)) for s in sets), generator_tag, seed)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self.adjacency], dtype=np.int64)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def edges(self) -> list[tuple[int, int]]:
        """Each undirected edge once, as ``(u, v)`` with ``u < v``."""
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    @property
    def num_edges(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def to_text(self) -> str:
        seed = "none" if self.seed is None else str(self.seed)
        lines = [f"# nodes={self.n} generator={self.generator_tag} seed={seed}"]
        lines += [f"{u} {v}" for u, v in self.edges()]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise InvalidParameter("missing edge-list header")
        fields = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        seed = None if fields.get("seed", "none") == "none" else int(fields["seed"])
        edges = [tuple(map(int, ln.split())) for ln in lines[1:] if ln.strip() and not ln.startswith("#")]
        return cls.from_edges(int(fields["nodes"]), edges, fields.get("generator", "custom"), seed)

    @classmethod
    def load(cls, path: str | Path) -> "Graph":
        return cls.from_text(Path(path).read_text())


def is_connected(adjacency) -> bool:
    n = len(adjacency)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        v = queue.popleft()
        for u in adjacency[v]:
            if not seen[u]:
                seen[u] = True
                count += 1
                queue.append(u)
    return count == n


def build_ring(n: int) -> Graph:
    if n < 3:
        raise InvalidParameter("ring needs n >= 3")
    return Graph.from_edges(n, ((i, (i + 1) % n) for i in range(n)), f"ring:n={n}")


def build_grid2d(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise InvalidParameter("grid needs rows*cols >= 2")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(rows * cols, edges, f"grid2d:rows={rows},cols={cols}")


def _resample_until_connected(n: int, seed: int, tag: str,
                              sample: Callable[[np.random.Generator], list]) -> Graph:
    for attempt in range(CONNECT_RETRIES):
        rng = np.random.default_rng(seed + attempt)
        edges = sample(rng)
        sets = [set() for _ in range(n)]
        for u, v in edges:
            sets[u].add(v)
            sets[v].add(u)
        adjacency = tuple(tuple(sorted(s)) for s in sets)
        if is_connected(adjacency):
            return Graph(n, adjacency, tag, seed)
    raise ConstructionFailure(
        f"{tag}: no connected sample in {CONNECT_RETRIES} attempts", CONNECT_RETRIES
    )


def build_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) conditioned on connectivity.

    Disconnected draws are discarded and redrawn from ``seed + attempt``.
    """
    if n < 2 or not 0 < p <= 1:
        raise InvalidParameter("erdos_renyi needs n >= 2 and 0 < p <= 1")
    iu, ju = np.triu_indices(n, k=1)

    def sample(rng):
        keep = rng.random(iu.size) < p
        return list(zip(iu[keep].tolist(), ju[keep].tolist()))

    return _resample_until_connected(n, seed, f"erdos_renyi:n={n},p={p!r}", sample)


def build_watts_strogatz(n: int, k: int, beta: float, seed: int) -> Graph:
    """Small-world graph: ring lattice with ``k/2`` neighbours per side whose
    edges are rewired with probability ``beta``.

    Rewiring keeps the source endpoint and draws a uniform new target that is
    neither the source nor an existing neighbour, so the edge count stays
    ``n*k/2``.  Connectivity is enforced by resampling, as for Erdos-Renyi.
    """
    if k < 2 or k % 2 or n <= k or not 0 <= beta <= 1:
        raise InvalidParameter("watts_strogatz needs n > k >= 2, k even, 0 <= beta <= 1")

    def sample(rng):
        nbrs = [set() for _ in range(n)]
        for u in range(n):
            for j in range(1, k // 2 + 1):
                v = (u + j) % n
                nbrs[u].add(v)
                nbrs[v].add(u)
        for j in range(1, k // 2 + 1):
            for u in range(n):
                v = (u + j) % n
                if rng.random() < beta and len(nbrs[u]) < n - 1 and v in nbrs[u]:
                    w = int(rng.integers(n))
                    while w == u or w in nbrs[u]:
                        w = int(rng.integers(n))
                    nbrs[u].discard(v)
                    nbrs[v].discard(u)
                    nbrs[u].add(w)
                    nbrs[w].add(u)
        return [(u, v) for u in range(n) for v in nbrs[u] if u < v]

    return _resample_until_connected(n, seed, f"watts_strogatz:n={n},k={k},beta={beta!r}", sample)
