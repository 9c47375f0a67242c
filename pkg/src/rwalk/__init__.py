"""Random-walk SGD on graphs with Metropolis-Hastings importance sampling
and Levy-jump perturbations."""

from .graph import Graph, build_erdos_renyi, build_grid2d, build_ring, build_watts_strogatz
from .model import Dataset, GroundTruth, NodeData, generate_heterogeneous, generate_homogeneous, solve_least_squares
from .sgd import RunConfig, Trace, run
from .transition import (RowStochasticMatrix, levy_matrix, mh_importance, mh_target, mh_uniform, mix,
                         mixing_time, simple_rw, stationary, tv_distance)
from .walker import JumpParams

__version__ = "0.1.0"
