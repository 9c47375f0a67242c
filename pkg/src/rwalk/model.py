"""Synthetic least-squares data, one sample per node.

Each node ``v`` holds ``(a_v, y_v)`` with local loss ``f_v(x) = (y_v - x·a_v)^2``
and smoothness constant ``L_v = 2 ||a_v||^2``.

Gaussian draws come from ``numpy.random.default_rng(seed)`` (PCG64 bit
generator, ziggurat normals).  Draw order: ``x_true`` (d normals), the
variance classes (n uniforms), the heavy-floor permutation (only when the
floor kicks in), features (n*d normals, row-major), noise (n normals).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InvalidParameter, RankDeficiency

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class NodeData:
    a: np.ndarray
    y: float
    lipschitz: float

    @classmethod
    def make(cls, a, y) -> "NodeData":
        a = np.atleast_1d(np.asarray(a, dtype=np.float64))
        return cls(a, float(y), 2.0 * float(a @ a))


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray          # (n, d)
    responses: np.ndarray         # (n,)
    x_true: np.ndarray
    heavy: np.ndarray             # bool mask of high-variance draws
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        object.__setattr__(self, "features", a)
        object.__setattr__(self, "responses", np.asarray(self.responses, dtype=np.float64).ravel())
        object.__setattr__(self, "x_true", np.asarray(self.x_true, dtype=np.float64).ravel())
        object.__setattr__(self, "heavy", np.asarray(self.heavy, dtype=bool).ravel())
        if self.responses.shape[0] != a.shape[0] or self.x_true.shape[0] != a.shape[1]:
            raise DimensionMismatch("features, responses and x_true disagree in shape")

    @classmethod
    def from_nodes(cls, nodes: list[NodeData], x_true=None) -> "Dataset":
        a = np.array([nd.a for nd in nodes], dtype=np.float64)
        y = np.array([nd.y for nd in nodes])
        if x_true is None:
            x_true = np.zeros(a.shape[1])
        return cls(a, y, x_true, np.zeros(len(nodes), dtype=bool))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def lipschitz(self) -> np.ndarray:
        return 2.0 * np.einsum("ij,ij->i", self.features, self.features)

    @property
    def l_bar(self) -> float:
        return float(self.lipschitz.mean())

    @property
    def l_min(self) -> float:
        return float(self.lipschitz.min())

    @property
    def l_max(self) -> float:
        return float(self.lipschitz.max())

    def node(self, v: int) -> NodeData:
        return NodeData.make(self.features[v], self.responses[v])

    @property
    def nodes(self) -> list[NodeData]:
        return [self.node(v) for v in range(self.n)]

    def to_text(self) -> str:
        header = {"n": self.n, "d": self.d, "seed": self.seed, "params": self.params,
                  "x_true": [float(f"{x:.17g}") for x in self.x_true],
                  "heavy": np.flatnonzero(self.heavy).tolist()}
        lines = ["# rwalk-dataset v1", "# " + json.dumps(header, sort_keys=True)]
        for v in range(self.n):
            vals = " ".join(f"{x:.17g}" for x in self.features[v])
            lines.append(f"{v} {self.responses[v]:.17g} {vals}")
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "Dataset":
        lines = text.splitlines()
        header = json.loads(lines[1][1:])
        n, d = header["n"], header["d"]
        a = np.zeros((n, d))
        y = np.zeros(n)
        for ln in lines[2:]:
            if not ln.strip():
                continue
            parts = ln.split()
            v = int(parts[0])
            y[v] = float(parts[1])
            a[v] = [float(t) for t in parts[2:]]
        heavy = np.zeros(n, dtype=bool)
        heavy[header["heavy"]] = True
        return cls(a, y, header["x_true"], heavy, header["seed"], header["params"])

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class GroundTruth:
    x_star: np.ndarray
    sigma_star_sq: float
    mse_star: float


def generate_heterogeneous(n: int, d: int, sigma_l_sq: float, sigma_h_sq: float,
                           p_high: float, seed: int, min_heavy: int = 0,
                           noise_sq: float = 1.0) -> Dataset:
    """Two-class Gaussian features: variance ``sigma_h_sq`` with probability
    ``p_high``, else ``sigma_l_sq``; ``y = a·x_true + eps``.

    If the Bernoulli draws yield fewer than ``min_heavy`` heavy nodes, the
    shortfall is promoted from a seeded permutation of the light nodes.
    """
    if n < 1 or d < 1:
        raise InvalidParameter("need n >= 1 and d >= 1")
    if sigma_l_sq <= 0 or sigma_h_sq <= 0 or noise_sq < 0:
        raise InvalidParameter("variances must be positive")
    if not 0 <= p_high <= 1:
        raise InvalidParameter("p_high must lie in [0, 1]")
    if not 0 <= min_heavy <= n:
        raise InvalidParameter(f"min_heavy={min_heavy} must lie in [0, n={n}]")
    rng = np.random.default_rng(seed)
    x_true = rng.standard_normal(d)
    heavy = rng.random(n) < p_high
    deficit = min_heavy - int(heavy.sum())
    if deficit > 0:
        light = np.flatnonzero(~heavy)
        heavy[rng.permutation(light)[:deficit]] = True
    scale = np.sqrt(np.where(heavy, sigma_h_sq, sigma_l_sq))
    a = rng.standard_normal((n, d)) * scale[:, None]
    eps = rng.standard_normal(n) * np.sqrt(noise_sq)
    y = a @ x_true + eps
    params = {"generator": "heterogeneous", "n": n, "d": d, "sigma_l_sq": sigma_l_sq,
              "sigma_h_sq": sigma_h_sq, "p_high": p_high, "min_heavy": min_heavy,
              "noise_sq": noise_sq}
    return Dataset(a, y, x_true, heavy, seed, params)


def generate_homogeneous(n: int, d: int, sigma_sq: float, seed: int, noise_sq: float = 1.0) -> Dataset:
    return generate_heterogeneous(n, d, sigma_sq, sigma_sq, 0.0, seed, 0, noise_sq)


def local_loss(node: NodeData, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != node.a.shape:
        raise DimensionMismatch(f"x has shape {x.shape}, node expects {node.a.shape}")
    return float((node.y - x @ node.a) ** 2)


def local_grad(node: NodeData, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != node.a.shape:
        raise DimensionMismatch(f"x has shape {x.shape}, node expects {node.a.shape}")
    return 2.0 * (x @ node.a - node.y) * node.a


def node_gradients(dataset: Dataset, x) -> np.ndarray:
    """All local gradients at ``x`` as an (n, d) array."""
    resid = dataset.features @ x - dataset.responses
    return 2.0 * resid[:, None] * dataset.features


def global_mse(dataset: Dataset, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dataset.d,):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({dataset.d},)")
    resid = dataset.responses - dataset.features @ x
    return float(resid @ resid / dataset.n)


def solve_least_squares(dataset: Dataset) -> GroundTruth:
    """Exact minimiser via Cholesky on the normal equations."""
    a, y = dataset.features, dataset.responses
    gram = a.T @ a
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise RankDeficiency(f"normal matrix condition number {cond:.3g} exceeds {MAX_CONDITION:g}", cond)
    x_star = scipy.linalg.cho_solve(scipy.linalg.cho_factor(gram), a.T @ y)
    grads = node_gradients(dataset, x_star)
    sigma_star_sq = float(np.max(np.einsum("ij,ij->i", grads, grads)))
    return GroundTruth(x_star, sigma_star_sq, global_mse(dataset, x_star))
