"""Token movement for random-walk SGD: Metropolis-Hastings steps and
Levy jumps (bursts of uniform-neighbour hops with no model update).

Every random decision consumes uniforms from one :class:`RandomStream`
in a fixed order per move:

1. jump decision ``u < p_j`` (drawn only while the effective ``p_j > 0``),
2. on a jump: one uniform for the length, then one per hop;
   otherwise one uniform for the Metropolis-Hastings row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter
from .graph import Graph
from .transition import RowStochasticMatrix

BLOCK = 8192


class RandomStream:
    """Buffered stream of U[0, 1) doubles from a seeded PCG64 generator."""

    def __init__(self, seed: int):
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._buf: list[float] = []
        self._pos = 0

    def __call__(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def integer(self, n: int) -> int:
        return min(int(self() * n), n - 1)


@dataclass(frozen=True)
class JumpParams:
    p_j: float = 0.1
    p_d: float = 0.5
    r: int = 3
    t_switch: int | None = None
    # d + 1 hops per jump, as a `while d >= 0` loop would do
    literal_hops: bool = False
    include_self_in_jumps: bool = False

    def __post_init__(self):
        if not 0 <= self.p_j <= 1:
            raise InvalidParameter("p_j must lie in [0, 1]")
        if not 0 < self.p_d < 1:
            raise InvalidParameter("p_d must lie in (0, 1)")
        if self.r < 1:
            raise InvalidParameter("r must be >= 1")
        if self.t_switch is not None and self.t_switch < 0:
            raise InvalidParameter("t_switch must be nonnegative")

    def p_j_at(self, t: int | None) -> float:
        if self.t_switch is not None and t is not None and t >= self.t_switch:
            return 0.0
        return self.p_j


@dataclass
class WalkerState:
    node: int
    rng: RandomStream
    comm_count: int = 0     # transfers to a different node
    step_count: int = 0     # raw transitions, self-loops included
    update_count: int = 0


def sample_trunc_geom(p_d: float, r: int, rng) -> int:
    """Jump length in ``1..r`` with ``P(D=k) ∝ p_d (1-p_d)^(k-1)``, by inverse CDF."""
    if not 0 < p_d < 1 or r < 1:
        raise InvalidParameter("need 0 < p_d < 1 and r >= 1")
    u = rng()
    q = 1.0 - p_d
    # CDF(k) = (1 - q^k) / (1 - q^r); smallest k with CDF(k) > u
    k = math.floor(math.log1p(-u * (1.0 - q**r)) / math.log(q)) + 1
    return min(max(k, 1), r)


def step_mh(state: WalkerState, p_is: RowStochasticMatrix) -> int:
    nxt = p_is.sample_row(state.node, state.rng())
    state.step_count += 1
    if nxt != state.node:
        state.comm_count += 1
    state.node = nxt
    return nxt


def _hop(state: WalkerState, graph: Graph, include_self: bool) -> None:
    nbrs = graph.adjacency[state.node]
    if include_self:
        k = state.rng.integer(len(nbrs) + 1)
        nxt = state.node if k == len(nbrs) else nbrs[k]
    else:
        nxt = nbrs[state.rng.integer(len(nbrs))] if nbrs else state.node
    state.step_count += 1
    if nxt != state.node:
        state.comm_count += 1
    state.node = nxt


def step_mhlj(state: WalkerState, graph: Graph, p_is: RowStochasticMatrix,
              params: JumpParams, t: int | None = None) -> int:
    """One move of the jump-perturbed walk; ``t`` drives the ``t_switch`` schedule."""
    p_j = params.p_j_at(t)
    if p_j > 0 and state.rng() < p_j:
        hops = sample_trunc_geom(params.p_d, params.r, state.rng)
        if params.literal_hops:
            hops += 1
        for _ in range(hops):
            _hop(state, graph, params.include_self_in_jumps)
        return state.node
    return step_mh(state, p_is)


def expected_comm_bound(p_j: float, p_d: float) -> float:
    """Upper bound on expected transitions per update, ``1 + p_j (1/p_d - 1)``."""
    return 1.0 + p_j * (1.0 / p_d - 1.0)


def expected_jump_length(p_d: float, r: int) -> float:
    k = np.arange(1, r + 1)
    pmf = p_d * (1 - p_d) ** (k - 1) / (1 - (1 - p_d) ** r)
    return float(k @ pmf)
