"""Graduated nonconvexity / concavity annealing for graph matching and QAP."""

from .assignment import solve_min
from .matrix_space import PartialPermutation, is_discrete, is_feasible, to_matrix
from .objectives import (
    GraphMatching,
    GraphPair,
    QapInstance,
    QuadraticAssignment,
    SubgraphMatching,
)
from .solver import NumericalError, SolveResult, SolverConfig, solve

__all__ = [
    "GraphMatching",
    "GraphPair",
    "NumericalError",
    "PartialPermutation",
    "QapInstance",
    "QuadraticAssignment",
    "SolveResult",
    "SolverConfig",
    "SubgraphMatching",
    "is_discrete",
    "is_feasible",
    "solve",
    "solve_min",
    "to_matrix",
]
