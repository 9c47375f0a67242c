"""Wiring from an :class:`~rwalk.config.ExperimentConfig` to graphs,
datasets, runs and reports.  The CLI is a thin layer over these functions.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import graph as graphs
from .config import FORMAT_VERSION, ExperimentConfig, GraphSection, DataSection
from .diagnostics import occupancy
from .errors import Divergence, RwalkError
from .model import Dataset, GroundTruth, generate_heterogeneous, generate_homogeneous, solve_least_squares
from .sgd import RunConfig, Trace, build_kernel, error_gap_estimate, run, theoretical_step_cap
from .transition import (importance_distribution, detailed_balance_residual, levy_matrix, mh_importance,
                         mh_uniform, mix, mixing_time, one_norm_diff, stationary, tv_distance)
from .walker import JumpParams

GRID_MAX_HALVINGS = 40
GRID_LOG_POINTS = 200


def build_graph(section: GraphSection) -> graphs.Graph:
    if section.type == "ring":
        return graphs.build_ring(section.n)
    if section.type == "grid2d":
        return graphs.build_grid2d(section.rows, section.cols)
    if section.type == "erdos_renyi":
        return graphs.build_erdos_renyi(section.n, section.p, section.seed)
    if section.type == "watts_strogatz":
        return graphs.build_watts_strogatz(section.n, section.k, section.beta, section.seed)
    return graphs.Graph.load(section.path)


def build_dataset(section: DataSection, n: int) -> Dataset:
    if section.homogeneous:
        sigma = section.sigma_sq if section.sigma_sq is not None else section.sigma_l_sq
        return generate_homogeneous(n, section.d, sigma, section.seed, section.noise_sq)
    return generate_heterogeneous(n, section.d, section.sigma_l_sq, section.sigma_h_sq,
                                  section.p_high, section.seed, section.min_heavy, section.noise_sq)


def jump_params(cfg: ExperimentConfig) -> JumpParams | None:
    a = cfg.algo
    if a.p_j is None:
        return None
    return JumpParams(a.p_j, a.p_d, a.r, a.t_switch, a.literal_hops, a.include_self_in_jumps)


@dataclass
class Testbed:
    graph: graphs.Graph
    dataset: Dataset
    truth: GroundTruth


def build_testbed(cfg: ExperimentConfig) -> Testbed:
    g = build_graph(cfg.graph)
    ds = build_dataset(cfg.data, g.n)
    return Testbed(g, ds, solve_least_squares(ds))


def uniform_converges(bed: Testbed, gamma: float, T: int, seed: int) -> bool:
    """Uniform-MH run is finite and, over its second half, never rises above
    its starting MSE."""
    cfg = RunConfig(gamma, T, "uniform-mh", seed=seed,
                    log_every=max(1, T // GRID_LOG_POINTS), record_path=False)
    try:
        trace = run(bed.dataset, bed.graph, cfg, bed.truth)
    except Divergence:
        return False
    half = trace.mse[len(trace.mse) // 2:]
    return bool(np.all(np.isfinite(half)) and half.max() <= trace.initial_mse)


def auto_grid_gamma(bed: Testbed, T: int, seed: int) -> float:
    """Largest ``gamma = 2^-k`` for which uniform-MH converges."""
    for k in range(GRID_MAX_HALVINGS + 1):
        gamma = 2.0**-k
        if uniform_converges(bed, gamma, T, seed):
            return gamma
    raise RwalkError(f"no step size down to 2^-{GRID_MAX_HALVINGS} converges")


def resolve_gamma(cfg: ExperimentConfig, bed: Testbed) -> float:
    if cfg.algo.gamma == "auto-grid":
        return auto_grid_gamma(bed, cfg.algo.T, cfg.algo.seed)
    return float(cfg.algo.gamma)


def run_config(cfg: ExperimentConfig, sampler: str, gamma: float) -> RunConfig:
    return RunConfig(gamma=gamma, T=cfg.algo.T, sampler_kind=sampler,
                     jump=jump_params(cfg) if sampler == "mhlj" else None,
                     log_every=cfg.output.log_every, seed=cfg.algo.seed)


def summarize(trace: Trace, bed: Testbed, gamma: float) -> dict:
    occ = occupancy(trace, bed.dataset)
    T = trace.T
    return {
        "sampler": trace.config.sampler_kind,
        "gamma": gamma,
        "T": T,
        "final_mse": float(trace.mse[-1]),
        "plateau_mse": trace.plateau("mse"),
        "final_dist_sq": float(trace.dist_sq[-1]),
        "plateau_dist_sq": trace.plateau("dist_sq"),
        "mse_star": bed.truth.mse_star,
        "comm_count": int(trace.comm_count[-1]),
        "comm_per_update": float(trace.comm_count[-1]) / T,
        "steps_per_update": trace.step_count / T,
        "heavy_share": occ.heavy_share,
        "max_dwell": occ.max_dwell,
    }


@dataclass
class ExperimentResult:
    gamma: float
    traces: dict[str, Trace]
    summaries: dict[str, dict]


def run_experiment(cfg: ExperimentConfig, bed: Testbed | None = None,
                   gamma: float | None = None) -> ExperimentResult:
    bed = bed or build_testbed(cfg)
    if gamma is None:
        gamma = resolve_gamma(cfg, bed)
    traces, summaries = {}, {}
    for sampler in cfg.algo.samplers:
        trace = run(bed.dataset, bed.graph, run_config(cfg, sampler, gamma), bed.truth)
        traces[sampler] = trace
        summaries[sampler] = summarize(trace, bed, gamma)
    return ExperimentResult(gamma, traces, summaries)


def diagnose(cfg: ExperimentConfig, bed: Testbed | None = None, eps: float = 0.25,
             t_max: int = 100_000) -> dict:
    """Chain-level quantities for the configured testbed and jump parameters."""
    bed = bed or build_testbed(cfg)
    jump = jump_params(cfg) or JumpParams(0.0)
    lip = bed.dataset.lipschitz
    pi_is = importance_distribution(lip)
    p_is = mh_importance(bed.graph, lip)
    p_levy = levy_matrix(bed.graph, jump.p_d, jump.r, jump.include_self_in_jumps)
    p_mix = mix(p_is, p_levy, jump.p_j)
    nu = stationary(p_mix)
    norm1 = one_norm_diff(p_is, p_levy)
    out = {
        "n": bed.graph.n,
        "p_j": jump.p_j,
        "p_d": jump.p_d,
        "r": jump.r,
        "tau_mix_is": mixing_time(p_is, eps, t_max, pi_is),
        "tau_mix_mix": mixing_time(p_mix, eps, t_max, nu),
        "residual_is": detailed_balance_residual(p_is, pi_is),
        "residual_mix": detailed_balance_residual(p_mix, pi_is),
        "tv_stationary_mix_vs_is": tv_distance(nu, pi_is),
        "norm1_is_minus_levy": norm1,
        "error_gap_estimate": error_gap_estimate(jump.p_j, norm1),
        "l_bar": bed.dataset.l_bar,
        "l_min": bed.dataset.l_min,
        "l_max": bed.dataset.l_max,
        "sigma_star_sq": bed.truth.sigma_star_sq,
    }
    if cfg.algo.mu is not None and isinstance(cfg.algo.gamma, float):
        cap = theoretical_step_cap(bed.dataset.l_bar, cfg.algo.mu, cfg.algo.T, out["tau_mix_mix"],
                                   bed.truth.sigma_star_sq, float(bed.truth.x_star @ bed.truth.x_star))
        out["step_cap"] = cap.value
        out["step_cap_log_branch_vacuous"] = cap.log_branch_vacuous
    return out


def matrices(cfg: ExperimentConfig, bed: Testbed | None = None) -> dict:
    bed = bed or build_testbed(cfg)
    lip = bed.dataset.lipschitz
    out = {"mh_uniform": mh_uniform(bed.graph), "mh_importance": mh_importance(bed.graph, lip)}
    jump = jump_params(cfg)
    if jump is not None:
        out["levy"] = levy_matrix(bed.graph, jump.p_d, jump.r, jump.include_self_in_jumps)
        out["mix"] = mix(out["mh_importance"], out["levy"], jump.p_j)
    return out


# -- sweeps -----------------------------------------------------------------

def worker_count(jobs: int) -> int:
    cap = os.environ.get("RWALK_THREADS")
    n = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n, jobs))


def _grid_key(cfg: ExperimentConfig) -> str:
    e = cfg.echo()
    return json.dumps([e["graph"], e["data"], e["algo"]["T"], e["algo"]["seed"]], sort_keys=True)


def _grid_job(cfg: ExperimentConfig) -> float:
    return auto_grid_gamma(build_testbed(cfg), cfg.algo.T, cfg.algo.seed)


def _sweep_job(args) -> list[dict]:
    cfg, gamma = args
    try:
        result = run_experiment(cfg, gamma=gamma)
    except Divergence as exc:
        return [{"sampler": s, "gamma": gamma, "diverged_at": exc.iteration} for s in cfg.algo.samplers]
    return list(result.summaries.values())


def sweep(cfg: ExperimentConfig, name: str, values: list, replicas: int = 1,
          workers: int | None = None) -> list[dict]:
    """Summary rows for every (value, replica, sampler), ordered by
    (value index, replica, sampler order).  Replica ``k`` offsets every seed by ``k``."""
    if not values:
        raise RwalkError("sweep value list is empty")
    if replicas < 1:
        raise RwalkError("replicas must be >= 1")
    jobs = [(vi, k, cfg.with_value(name, v).with_seed_offset(k))
            for vi, v in enumerate(values) for k in range(replicas)]
    workers = workers or worker_count(len(jobs))
    pool_map = _executor_map(workers)

    gammas: dict[str, float] = {}
    pending = {}
    for _, _, c in jobs:
        if c.algo.gamma == "auto-grid":
            pending.setdefault(_grid_key(c), c)
        else:
            gammas[_grid_key(c) + repr(c.algo.gamma)] = float(c.algo.gamma)
    keys = list(pending)
    for key, gamma in zip(keys, pool_map(_grid_job, [pending[k] for k in keys])):
        gammas[key] = gamma

    def gamma_of(c):
        if c.algo.gamma == "auto-grid":
            return gammas[_grid_key(c)]
        return float(c.algo.gamma)

    results = pool_map(_sweep_job, [(c, gamma_of(c)) for _, _, c in jobs])
    rows = []
    for (vi, k, _), summaries in zip(jobs, results):
        for s in summaries:
            rows.append({"param": name, "value": values[vi], "replica": k, **s})
    return rows


def _executor_map(workers: int):
    def pool_map(fn, items):
        items = list(items)
        if workers <= 1 or len(items) <= 1:
            return [fn(it) for it in items]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return pool_map


SUMMARY_COLUMNS = ["param", "value", "replica", "sampler", "gamma", "T", "final_mse", "plateau_mse",
                   "final_dist_sq", "plateau_dist_sq", "mse_star", "comm_count", "comm_per_update",
                   "steps_per_update", "heavy_share", "max_dwell", "diverged_at"]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def file_header(cfg: ExperimentConfig, kind: str, extra: dict | None = None) -> str:
    echo = cfg.echo()
    if extra:
        echo = {**echo, **extra}
    return f"# {FORMAT_VERSION} output={kind}\n# config=" + json.dumps(echo, sort_keys=True) + "\n"


def sweep_csv(cfg: ExperimentConfig, rows: list[dict], extra: dict | None = None) -> str:
    lines = [file_header(cfg, "sweep", extra).rstrip("\n"), ",".join(SUMMARY_COLUMNS)]
    for row in rows:
        lines.append(",".join(format_value(row.get(c)) for c in SUMMARY_COLUMNS))
    return "\n".join(lines) + "\n"


def key_value_block(d: dict) -> str:
    return "".join(f"{k}={format_value(v)}\n" for k, v in d.items())


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
