"""Transition matrices for random walks on a :class:`~rwalk.graph.Graph`
and the Markov-chain diagnostics used to compare them.

Matrices are kept as ``scipy.sparse`` CSR inside :class:`RowStochasticMatrix`.
Distributions are plain 1-d ``numpy`` arrays; :func:`as_distribution`
validates them.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, InvalidParameter, NonConvergence
from .graph import Graph

ROW_SUM_TOL = 1e-12
RATE_WINDOW = 16


@dataclass(frozen=True, eq=False)
class RowStochasticMatrix:
    """Sparse row-stochastic matrix.

    ``support`` is the boolean pattern the entries are allowed to occupy
    (graph edges plus the diagonal, or the r-hop closure for jump kernels).
    """

    matrix: sp.csr_matrix
    kind: str = "custom"
    support: sp.csr_matrix | None = None

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=np.float64)
        m.sum_duplicates()
        m.sort_indices()
        object.__setattr__(self, "matrix", m)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got {m.shape}")
        self.check()

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def check(self) -> None:
        m = self.matrix
        if m.nnz and (m.data.min() < 0 or m.data.max() > 1):
            raise InvalidParameter(f"{self.kind}: entries outside [0, 1]")
        sums = np.asarray(m.sum(axis=1)).ravel()
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise InvalidParameter(f"{self.kind}: row {worst} sums to {sums[worst]!r}")
        if self.support is not None:
            outside = sp.csr_matrix(m - m.multiply(self.support.astype(bool)))
            outside.eliminate_zeros()
            if outside.nnz:
                raise InvalidParameter(f"{self.kind}: entries outside declared support")

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[lo:hi], self.matrix.data[lo:hi]

    def __getitem__(self, ij) -> float:
        i, j = ij
        return float(self.matrix[i, j])

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    @cached_property
    def sampling_table(self) -> list[tuple[list[int], list[float]]]:
        """Per row: (columns, cumulative probabilities) as Python lists."""
        table = []
        for i in range(self.n):
            cols, probs = self.row(i)
            keep = probs > 0
            cols, probs = cols[keep], probs[keep]
            table.append((cols.tolist(), np.cumsum(probs).tolist()))
        return table

    def sample_row(self, i: int, u: float) -> int:
        """Inverse-CDF draw from row ``i`` given a uniform ``u`` in [0, 1)."""
        cols, cum = self.sampling_table[i]
        k = bisect_right(cum, u)
        return cols[k] if k < len(cols) else cols[-1]

    def to_text(self) -> str:
        m = self.matrix.tocoo()
        lines = [f"# n={self.n} kind={self.kind}"]
        order = np.lexsort((m.col, m.row))
        lines += [f"{m.row[k]} {m.col[k]} {m.data[k]:.17g}" for k in order]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "RowStochasticMatrix":
        lines = text.splitlines()
        fields = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        n = int(fields["n"])
        rows, cols, vals = [], [], []
        for ln in lines[1:]:
            if ln.strip() and not ln.startswith("#"):
                i, j, p = ln.split()
                rows.append(int(i))
                cols.append(int(j))
                vals.append(float(p))
        m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        return cls(m, fields.get("kind", "custom"))


def as_distribution(weights, n: int | None = None) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64).ravel()
    if n is not None and w.size != n:
        raise DimensionMismatch(f"distribution has {w.size} entries, expected {n}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > ROW_SUM_TOL:
        raise InvalidParameter("distribution must be nonnegative and sum to 1")
    return w


def importance_distribution(lipschitz) -> np.ndarray:
    """Sampling law proportional to the per-node Lipschitz constants."""
    lip = np.asarray(lipschitz, dtype=np.float64)
    if np.any(lip <= 0):
        raise InvalidParameter("Lipschitz constants must be positive")
    return lip / lip.sum()


def adjacency_matrix(graph: Graph, self_loops: bool = False) -> sp.csr_matrix:
    rows = [v for v, nbrs in enumerate(graph.adjacency) for _ in nbrs]
    cols = [u for nbrs in graph.adjacency for u in nbrs]
    a = sp.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)),
                      shape=(graph.n, graph.n), dtype=np.int64)
    if self_loops:
        a = (a + sp.identity(graph.n, dtype=np.int64, format="csr")).tocsr()
    return a


def _edge_support(graph: Graph) -> sp.csr_matrix:
    return (adjacency_matrix(graph, self_loops=True) > 0).tocsr()


def _from_offdiag(graph: Graph, offdiag: dict[tuple[int, int], float], kind: str) -> RowStochasticMatrix:
    """Assemble a matrix from off-diagonal entries; the diagonal takes the residual."""
    n = graph.n
    rows, cols, vals = [], [], []
    resid = np.ones(n)
    for (i, j), p in offdiag.items():
        rows.append(i)
        cols.append(j)
        vals.append(p)
        resid[i] -= p
    for i in range(n):
        r = max(resid[i], 0.0)
        if r > 0 or graph.degree(i) == 0:
            rows.append(i)
            cols.append(i)
            vals.append(r if graph.degree(i) else 1.0)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return RowStochasticMatrix(m, kind, _edge_support(graph))


def simple_rw(graph: Graph) -> RowStochasticMatrix:
    """Uniform choice among neighbours: ``P(v, u) = 1/deg(v)``."""
    offdiag = {(v, u): 1.0 / graph.degree(v) for v, nbrs in enumerate(graph.adjacency) for u in nbrs}
    return _from_offdiag(graph, offdiag, "simple_rw")


def mh_uniform(graph: Graph) -> RowStochasticMatrix:
    """Metropolis-Hastings walk with uniform stationary distribution."""
    deg = graph.degrees
    offdiag = {
        (v, u): min(1.0, deg[v] / deg[u]) / deg[v]
        for v, nbrs in enumerate(graph.adjacency)
        for u in nbrs
    }
    return _from_offdiag(graph, offdiag, "mh_uniform")


def mh_importance(graph: Graph, lipschitz) -> RowStochasticMatrix:
    """Metropolis-Hastings walk targeting ``pi(v) ∝ L_v``.

    ``P(i, j) = min(1, deg(i) L_j / (deg(j) L_i)) / deg(i)`` on edges; the
    diagonal holds the rejected mass.
    """
    lip = np.asarray(lipschitz, dtype=np.float64)
    if lip.shape != (graph.n,):
        raise DimensionMismatch("need one Lipschitz constant per node")
    if np.any(lip <= 0) or not np.all(np.isfinite(lip)):
        raise InvalidParameter("Lipschitz constants must be positive and finite")
    deg = graph.degrees
    offdiag = {
        (i, j): min(1.0, (deg[i] * lip[j]) / (deg[j] * lip[i])) / deg[i]
        for i, nbrs in enumerate(graph.adjacency)
        for j in nbrs
    }
    return _from_offdiag(graph, offdiag, "mh_importance")


def mh_target(graph: Graph, pi) -> RowStochasticMatrix:
    """General Metropolis-Hastings kernel with a simple-random-walk proposal.

    ``P(i, j) = Q(i, j) min(1, pi_j Q(j, i) / (pi_i Q(i, j)))`` for ``j != i``.
    """
    pi = np.asarray(pi, dtype=np.float64)
    if pi.shape != (graph.n,):
        raise DimensionMismatch("target must have one entry per node")
    if np.any(pi <= 0):
        raise InvalidParameter("target distribution must be strictly positive")
    offdiag = {}
    for i, nbrs in enumerate(graph.adjacency):
        for j in nbrs:
            qij, qji = 1.0 / graph.degree(i), 1.0 / graph.degree(j)
            offdiag[i, j] = qij * min(1.0, (pi[j] * qji) / (pi[i] * qij))
    return _from_offdiag(graph, offdiag, "mh_target")


def jump_length_pmf(p_d: float, r: int) -> np.ndarray:
    """Truncated geometric pmf on ``1..r`` (index 0 is length 1)."""
    if not 0 < p_d < 1 or r < 1:
        raise InvalidParameter("need 0 < p_d < 1 and r >= 1")
    k = np.arange(1, r + 1)
    return p_d * (1 - p_d) ** (k - 1) / (1 - (1 - p_d) ** r)


def walk_counts(graph: Graph, r: int, self_loops: bool = False) -> list[sp.csr_matrix]:
    """Exact integer walk counts ``A^1 .. A^r`` (row i = walks from node i).

    Each product is row-wise neighbour expansion, so row i depends only on
    row i of the previous power.
    """
    a = adjacency_matrix(graph, self_loops)
    max_deg = int(np.asarray(a.sum(axis=1)).max()) if graph.n else 0
    if max_deg > 1 and r * np.log2(max_deg) >= 62:
        raise OverflowError(f"walk counts overflow int64 at r={r}, max degree {max_deg}")
    powers = [a]
    for _ in range(r - 1):
        powers.append((powers[-1] @ a).tocsr())
    return powers


def levy_matrix(graph: Graph, p_d: float, r: int, self_loops: bool = False) -> RowStochasticMatrix:
    """Jump kernel: truncated-geometric mixture of row-normalised ``A^i``.

    With ``self_loops`` the adjacency gets ones on its diagonal, which lets
    a hop stay in place.
    """
    weights = jump_length_pmf(p_d, r)
    n = graph.n
    if n == 1:
        return RowStochasticMatrix(sp.csr_matrix(np.ones((1, 1))), "levy")
    total = sp.csr_matrix((n, n), dtype=np.float64)
    for w, counts in zip(weights, walk_counts(graph, r, self_loops)):
        rowsum = np.asarray(counts.sum(axis=1), dtype=np.float64).ravel()
        total = total + sp.diags(w / rowsum) @ counts.astype(np.float64)
    support = (walk_counts(graph, r, True)[-1] > 0).tocsr()
    return RowStochasticMatrix(total.tocsr(), "levy", support)


def mix(p_is: RowStochasticMatrix, p_levy: RowStochasticMatrix, p_j: float) -> RowStochasticMatrix:
    """Convex combination ``(1 - p_j) p_is + p_j p_levy``."""
    if p_is.n != p_levy.n:
        raise DimensionMismatch(f"cannot mix {p_is.n}x{p_is.n} with {p_levy.n}x{p_levy.n}")
    if not 0 <= p_j <= 1:
        raise InvalidParameter("p_j must lie in [0, 1]")
    if p_j == 0:
        m = p_is.matrix.copy()
    elif p_j == 1:
        m = p_levy.matrix.copy()
    else:
        m = (1 - p_j) * p_is.matrix + p_j * p_levy.matrix
    return RowStochasticMatrix(m, "mix")


def stationary(p: RowStochasticMatrix, tol: float = 1e-12, max_iter: int = 1_000_000) -> np.ndarray:
    """Left fixed point ``nu P = nu`` by power iteration from the uniform start.

    Stops once the total-variation step between successive iterates is below
    ``tol`` *and* the geometric tail bound ``step * rho / (1 - rho)`` is too,
    where ``rho`` is the contraction rate observed over the last
    ``RATE_WINDOW`` iterations.  The second condition makes ``tol`` a bound on
    the distance to the fixed point rather than on the last step, which
    matters on slowly mixing chains.  Steps at roundoff level, ``n`` machine
    epsilons, count as converged.  Periodic chains never settle and raise
    :class:`NonConvergence`.
    """
    pt = p.matrix.T.tocsr()
    nu = np.full(p.n, 1.0 / p.n)
    history = deque(maxlen=RATE_WINDOW + 1)
    floor = p.n * np.finfo(np.float64).eps
    diff = np.inf
    for _ in range(max_iter):
        nxt = pt @ nu
        nxt /= nxt.sum()
        diff = 0.5 * np.abs(nxt - nu).sum()
        nu = nxt
        history.append(diff)
        if diff <= floor:
            return nu
        if diff < tol and len(history) > RATE_WINDOW and history[0] > 0:
            rho = (diff / history[0]) ** (1.0 / RATE_WINDOW)
            if rho < 1 and diff * rho / (1 - rho) < tol:
                return nu
    raise NonConvergence(f"power iteration did not reach tol={tol} in {max_iter} steps", nu, diff)


def tv_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return 0.5 * float(np.abs(a - b).sum())


def mixing_time(p: RowStochasticMatrix, eps: float = 0.25, t_max: int = 100_000,
                pi: np.ndarray | None = None) -> int:
    """Smallest ``t`` with ``max_v TV(P^t(v, .), pi) <= eps``.

    All n row distributions are advanced together as a dense n-by-n array,
    so memory is O(n^2).
    """
    if pi is None:
        pi = stationary(p)
    pt = p.matrix.T.tocsr()
    # columns of `dist` are the row distributions P^t(v, .)
    dist = np.eye(p.n)
    worst = np.inf
    for t in range(1, t_max + 1):
        dist = pt @ dist
        worst = 0.5 * float(np.abs(dist - pi[:, None]).sum(axis=0).max())
        if worst <= eps:
            return t
    raise NonConvergence(f"worst-case TV still {worst:.3g} > {eps} after {t_max} steps", None, worst)


def detailed_balance_residual(p: RowStochasticMatrix, pi) -> float:
    """``max |pi_i p_ij - pi_j p_ji|`` over stored entries."""
    pi = np.asarray(pi, dtype=np.float64)
    flow = sp.diags(pi) @ p.matrix
    diff = (flow - flow.T).tocsr()
    return float(np.abs(diff.data).max()) if diff.nnz else 0.0


def one_norm_diff(a: RowStochasticMatrix, b: RowStochasticMatrix) -> float:
    """Maximum absolute row sum of ``a - b``."""
    if a.n != b.n:
        raise DimensionMismatch(f"sizes differ: {a.n} vs {b.n}")
    d = abs(a.matrix - b.matrix)
    return float(np.asarray(d.sum(axis=1)).max()) if a.n else 0.0
