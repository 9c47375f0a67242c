"""Entrapment measurements computed from a :class:`~rwalk.sgd.Trace`."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .model import Dataset
from .sgd import Trace
from .transition import importance_distribution, tv_distance

HEAVY_FACTOR = 10.0


def heavy_mask(dataset: Dataset, factor: float = HEAVY_FACTOR) -> np.ndarray:
    lip = dataset.lipschitz
    return lip > factor * lip.mean()


def visit_sequence(trace: Trace) -> tuple[np.ndarray, bool]:
    """Updating-node sequence and whether it is decimated."""
    if trace.path is not None:
        return trace.path, False
    return trace.nodes, trace.log_every > 1


def run_lengths(seq) -> tuple[np.ndarray, np.ndarray]:
    """Values and lengths of maximal constant runs in ``seq``."""
    seq = np.asarray(seq)
    if seq.size == 0:
        return seq, np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, seq[1:] != seq[:-1]])
    lengths = np.diff(np.r_[starts, seq.size])
    return seq[starts], lengths


@dataclass(frozen=True)
class OccupancyReport:
    visit_counts: np.ndarray
    empirical: np.ndarray
    tv_to_target: float
    max_dwell: int
    heavy_share: float
    decimated: bool

    def as_dict(self) -> dict:
        return {
            "updates": int(self.visit_counts.sum()),
            "tv_to_target": self.tv_to_target,
            "max_dwell": self.max_dwell,
            "heavy_share": self.heavy_share,
            "decimated": self.decimated,
        }

    def to_text(self) -> str:
        return "".join(f"{k}={_fmt(v)}\n" for k, v in self.as_dict().items())

    def csv_header(self) -> str:
        return ",".join(self.as_dict())

    def csv_row(self) -> str:
        return ",".join(_fmt(v) for v in self.as_dict().values())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def occupancy(trace: Trace, dataset: Dataset, heavy_factor: float = HEAVY_FACTOR,
              target=None) -> OccupancyReport:
    """Visit statistics of the updating nodes.

    ``target`` defaults to the importance distribution of ``dataset``.
    """
    seq, decimated = visit_sequence(trace)
    if len(seq) == 0:
        raise InvalidParameter("empty trace")
    counts = np.bincount(seq, minlength=dataset.n)
    empirical = counts / counts.sum()
    if target is None:
        target = importance_distribution(dataset.lipschitz)
    _, lengths = run_lengths(seq)
    heavy = heavy_mask(dataset, heavy_factor)
    return OccupancyReport(
        visit_counts=counts,
        empirical=empirical,
        tv_to_target=tv_distance(empirical, target),
        max_dwell=int(lengths.max()),
        heavy_share=float(counts[heavy].sum() / counts.sum()),
        decimated=decimated,
    )


@dataclass(frozen=True)
class DwellHistogram:
    heavy: Counter
    light: Counter

    @staticmethod
    def _mean(c: Counter) -> float:
        total = sum(c.values())
        return sum(k * m for k, m in c.items()) / total if total else float("nan")

    @property
    def mean_heavy(self) -> float:
        return self._mean(self.heavy)

    @property
    def mean_light(self) -> float:
        return self._mean(self.light)


def dwell_distribution(trace: Trace, dataset: Dataset, heavy_factor: float = HEAVY_FACTOR,
                       drop_censored: bool = False) -> DwellHistogram:
    """Histogram of consecutive-visit run lengths split by node class.

    With ``drop_censored`` the first and last runs, whose true lengths are
    cut off by the trace boundaries, are excluded.
    """
    seq, _ = visit_sequence(trace)
    if len(seq) == 0:
        raise InvalidParameter("empty trace")
    values, lengths = run_lengths(seq)
    if drop_censored and len(values) > 2:
        values, lengths = values[1:-1], lengths[1:-1]
    heavy = heavy_mask(dataset, heavy_factor)
    hist = {True: Counter(), False: Counter()}
    for v, k in zip(values.tolist(), lengths.tolist()):
        hist[bool(heavy[v])][k] += 1
    return DwellHistogram(heavy=hist[True], light=hist[False])


def holding_time(p, v: int) -> float:
    """Expected consecutive stay at ``v`` under kernel ``p``: ``1/(1 - p[v, v])``."""
    return 1.0 / (1.0 - p[v, v])
