"""Exact and Laplacian-regularised optimal transport."""
from .barycenter import BarycenterResult, free_support_barycenter
from .core import METRICS, CostMatrix, Coupling, cost_matrix, solve_emd
from .regularized import (QuadraticTerm, RegularizedProblem,
                          RegularizedSolution, solve_laplacian_ot)
from .simplex import transport

__all__ = [
    "BarycenterResult",
    "CostMatrix",
    "Coupling",
    "METRICS",
    "QuadraticTerm",
    "RegularizedProblem",
    "RegularizedSolution",
    "cost_matrix",
    "free_support_barycenter",
    "solve_emd",
    "solve_laplacian_ot",
    "transport",
]
