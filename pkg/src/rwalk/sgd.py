"""Random-walk SGD: the model token is updated at the visited node, then
moved by one of three samplers.

``uniform-mh``
    Metropolis-Hastings with uniform target, plain update (weight 1).
``is-mh``
    Metropolis-Hastings with target ``∝ L_v``, update scaled by ``L̄ / L_v``.
``mhlj``
    ``is-mh`` plus Levy jumps with probability ``p_j`` after each update.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, Divergence, InvalidParameter
from .graph import Graph
from .model import Dataset, GroundTruth, solve_least_squares
from .transition import RowStochasticMatrix, mh_importance, mh_uniform
from .walker import JumpParams, RandomStream, WalkerState, step_mh, step_mhlj

SAMPLERS = ("uniform-mh", "is-mh", "mhlj")
TRACE_FORMAT = "rwalk-trace v1"
PLATEAU_FRACTION = 0.1


@dataclass(frozen=True)
class RunConfig:
    gamma: float
    T: int
    sampler_kind: str = "is-mh"
    jump: JumpParams | None = None
    log_every: int | None = None
    seed: int = 0
    record_path: bool = True

    def __post_init__(self):
        if self.gamma < 0 or not math.isfinite(self.gamma):
            raise InvalidParameter("gamma must be a finite nonnegative number")
        if self.T < 1:
            raise InvalidParameter("T must be >= 1")
        if self.sampler_kind not in SAMPLERS:
            raise InvalidParameter(f"sampler_kind must be one of {SAMPLERS}")
        if self.sampler_kind == "mhlj" and self.jump is None:
            raise InvalidParameter("mhlj needs jump parameters")
        if self.log_every is not None and self.log_every < 1:
            raise InvalidParameter("log_every must be >= 1")
        if self.jump is not None and self.jump.t_switch is not None and self.jump.t_switch > self.T:
            raise InvalidParameter("t_switch cannot exceed T")

    @property
    def log_interval(self) -> int:
        return self.log_every if self.log_every is not None else max(1, self.T // 2000)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["log_every"] = self.log_interval
        return out


@dataclass
class Trace:
    """Logged metrics of one run.

    Record ``k`` describes the model after ``iters[k]`` updates; ``nodes[k]``
    is the node that performed that update.  ``path`` (when recorded) is the
    full sequence ``v_0 .. v_{T-1}`` of updating nodes.
    """

    iters: np.ndarray
    nodes: np.ndarray
    mse: np.ndarray
    dist_sq: np.ndarray
    comm_count: np.ndarray
    final_x: np.ndarray
    config: RunConfig
    initial_mse: float
    initial_dist_sq: float
    step_count: int
    path: np.ndarray | None = None

    @property
    def T(self) -> int:
        return int(self.iters[-1])

    @property
    def log_every(self) -> int:
        return self.config.log_interval

    def plateau(self, column: str = "mse", fraction: float = PLATEAU_FRACTION) -> float:
        """Mean of ``column`` over the final ``fraction`` of logged records."""
        values = getattr(self, column)
        k = max(1, int(round(len(values) * fraction)))
        return float(np.mean(values[-k:]))

    def to_csv(self, extra_header: dict | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# {TRACE_FORMAT}\n")
        echo = {"run": self.config.to_dict()}
        if extra_header:
            echo.update(extra_header)
        buf.write("# config=" + json.dumps(echo, sort_keys=True, default=_jsonable) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "node", "mse", "dist_sq", "comm_count"])
        for t, v, m, ds, c in zip(self.iters, self.nodes, self.mse, self.dist_sq, self.comm_count):
            w.writerow([int(t), int(v), f"{m:.17g}", f"{ds:.17g}", int(c)])
        return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def read_trace_csv(text: str) -> dict[str, np.ndarray]:
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(rows)
    cols: dict[str, list] = {k: [] for k in reader.fieldnames}
    for row in reader:
        for k, v in row.items():
            cols[k].append(float(v))
    return {k: np.array(v) for k, v in cols.items()}


def build_kernel(graph: Graph, dataset: Dataset, sampler_kind: str) -> RowStochasticMatrix:
    if sampler_kind == "uniform-mh":
        return mh_uniform(graph)
    return mh_importance(graph, dataset.lipschitz)


def run(dataset: Dataset, graph: Graph, config: RunConfig,
        truth: GroundTruth | None = None, kernel: RowStochasticMatrix | None = None) -> Trace:
    """Run ``config.T`` SGD updates from ``x = 0`` at a uniformly drawn start node.

    Raises :class:`Divergence` as soon as the residual at the visited node
    is no longer finite.
    """
    if dataset.n != graph.n:
        raise DimensionMismatch(f"dataset has {dataset.n} nodes, graph has {graph.n}")
    if truth is None:
        truth = solve_least_squares(dataset)
    if kernel is None:
        kernel = build_kernel(graph, dataset, config.sampler_kind)

    a_rows = list(dataset.features)
    y = dataset.responses.tolist()
    lip = dataset.lipschitz
    if config.sampler_kind == "uniform-mh":
        step_scale = [2.0 * config.gamma] * dataset.n
    else:
        step_scale = (2.0 * config.gamma * dataset.l_bar / lip).tolist()

    rng = RandomStream(config.seed)
    state = WalkerState(node=rng.integer(graph.n), rng=rng)
    jump = config.jump if config.sampler_kind == "mhlj" else None
    x = np.zeros(dataset.d)
    x_star = truth.x_star

    def metrics(x):
        resid = dataset.responses - dataset.features @ x
        diff = x - x_star
        return float(resid @ resid / dataset.n), float(diff @ diff)

    initial_mse, initial_dist = metrics(x)
    log_every = config.log_interval
    iters, nodes, mse, dist, comm = [], [], [], [], []
    path = [] if config.record_path else None

    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(config.T):
            v = state.node
            a = a_rows[v]
            resid = float(a @ x) - y[v]
            if not math.isfinite(resid):
                raise Divergence(f"non-finite model at iteration {t}", t)
            x -= (step_scale[v] * resid) * a
            state.update_count += 1
            if path is not None:
                path.append(v)
            if jump is None:
                step_mh(state, kernel)
            else:
                step_mhlj(state, graph, kernel, jump, t + 1)
            if (t + 1) % log_every == 0 or t + 1 == config.T:
                m, ds = metrics(x)
                if not (math.isfinite(m) and math.isfinite(ds)):
                    raise Divergence(f"non-finite model at iteration {t + 1}", t + 1)
                iters.append(t + 1)
                nodes.append(v)
                mse.append(m)
                dist.append(ds)
                comm.append(state.comm_count)

    return Trace(
        iters=np.array(iters, dtype=np.int64),
        nodes=np.array(nodes, dtype=np.int64),
        mse=np.array(mse),
        dist_sq=np.array(dist),
        comm_count=np.array(comm, dtype=np.int64),
        final_x=x,
        config=config,
        initial_mse=initial_mse,
        initial_dist_sq=initial_dist,
        step_count=state.step_count,
        path=None if path is None else np.array(path, dtype=np.int64),
    )


class StepCap(NamedTuple):
    value: float
    log_branch_vacuous: bool


def theoretical_step_cap(l_bar: float, mu: float, T: float, tau_mix: float,
                         sigma_star_sq: float, dist0_sq: float) -> StepCap:
    """``min(1/L̄, ln(T dist0 mu^2 / (tau sigma*^2 L̄)) / (T mu))``.

    A log argument <= 1 makes the second branch nonpositive; the cap then
    falls back to ``1/L̄`` and the result is flagged.  Reporting only.
    """
    if min(l_bar, mu, T, tau_mix, sigma_star_sq, dist0_sq) <= 0:
        raise InvalidParameter("all step-cap inputs must be positive")
    arg = T * dist0_sq * mu**2 / (tau_mix * sigma_star_sq * l_bar)
    if arg <= 1:
        return StepCap(1.0 / l_bar, True)
    return StepCap(min(1.0 / l_bar, math.log(arg) / (T * mu)), False)


def error_gap_estimate(p_j: float, norm1diff: float) -> float:
    """Constant-free asymptotic bias term ``p_j^2 ||P_IS - P_Levy||_1^2``."""
    return p_j**2 * norm1diff**2
