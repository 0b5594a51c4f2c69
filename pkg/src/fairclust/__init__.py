"""Approximation algorithms for (p, q)-fair clustering."""

from .algorithms import Solution, baseline_norm_swap, solve, solve_pgeq_full, solve_pleq_full
from .errors import FairClustError, InputError, InternalError
from .instance import ClusterFamily, Instance, MetricSpace, gencost, make_instance, validate_metric
from .relax import round_or_cut, solve_relaxation

__version__ = "0.1.0"

__all__ = [
    "ClusterFamily",
    "FairClustError",
    "InputError",
    "Instance",
    "InternalError",
    "MetricSpace",
    "Solution",
    "baseline_norm_swap",
    "gencost",
    "make_instance",
    "round_or_cut",
    "solve",
    "solve_pgeq_full",
    "solve_pleq_full",
    "solve_relaxation",
    "validate_metric",
]
