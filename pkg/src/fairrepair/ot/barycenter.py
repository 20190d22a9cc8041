"""Free-support Wasserstein barycenter of several row sets.

Alternates between (a) solving one (optionally Laplacian-regularised)
transport problem per input set against the current support and (b) moving
every support row to the barycentric mean of the rows it is coupled to.
Uniform weights over the inputs; the support size is fixed up front.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..graphs import knn_graph, laplacian
from .core import Coupling, cost_matrix
from .regularized import QuadraticTerm, RegularizedProblem, solve_laplacian_ot

__all__ = ["BarycenterResult", "free_support_barycenter"]


@dataclass
class BarycenterResult:
    support: np.ndarray
    couplings: list[Coupling]
    objective_trace: list[float]
    converged: bool


def free_support_barycenter(group_matrices: list[np.ndarray],
                            lam: float = 0.0,
                            support_size: int | None = None,
                            metric: str = "sqeuclidean",
                            knn_k: int = 3,
                            tol: float = 1e-6,
                            max_outer: int = 10,
                            inner_tol: float = 1e-6,
                            inner_iters: int = 200,
                            seed: int = 0) -> BarycenterResult:
    """Barycenter of ``group_matrices`` (each N_i x d) with a free support.

    The support is initialised with ``support_size`` rows drawn uniformly
    with replacement from the stacked inputs (seeded).  When ``lam > 0``
    each per-group transport solve carries a quadratic penalty that keeps
    rows adjacent in the group's KNN graph coupled to nearby support rows.
    Returns the final support together with couplings solved against it.
    """
    mats = [np.ascontiguousarray(A, dtype=float) for A in group_matrices]
    if len(mats) < 1:
        raise ValueError("need at least one input matrix")
    d = mats[0].shape[1]
    if any(A.ndim != 2 or A.shape[1] != d for A in mats):
        raise ValueError("all inputs must be 2-d with a common column count")
    if support_size is None:
        support_size = mats[0].shape[0]
    if support_size < 1:
        raise ValueError("support_size must be >= 1")

    rng = np.random.default_rng(seed)
    stacked = np.vstack(mats)
    support = stacked[rng.integers(0, stacked.shape[0], size=support_size)].copy()

    # per-group structure matrices are fixed across outer iterations
    lap = [laplacian(knn_graph(A, knn_k)) if lam > 0 else None for A in mats]

    def solve_round(S: np.ndarray) -> tuple[list[Coupling], float]:
        couplings = []
        total = 0.0
        gram = S @ S.T if lam > 0 else None
        for A, L in zip(mats, lap):
            M = cost_matrix(S, A, metric)
            terms = []
            if lam > 0:
                terms = [QuadraticTerm(laplacian=L, gram=gram,
                                       weight=float(A.shape[0]), side="col")]
            sol = solve_laplacian_ot(RegularizedProblem(M, terms, lam),
                                     tol=inner_tol, max_iters=inner_iters)
            couplings.append(sol.coupling)
            total += sol.coupling.objective
        return couplings, total

    trace: list[float] = []
    converged = False
    for _ in range(max_outer):
        couplings, total = solve_round(support)
        trace.append(total)
        new_support = np.zeros_like(support)
        for cpl, A in zip(couplings, mats):
            new_support += support_size * (cpl.matrix @ A)
        new_support /= len(mats)
        shift = float(np.linalg.norm(new_support - support))
        support = new_support
        if shift <= tol * max(1.0, float(np.linalg.norm(support))):
            converged = True
            break

    # re-solve against the final support so couplings and support agree
    couplings, total = solve_round(support)
    trace.append(total)
    return BarycenterResult(support, couplings, trace, converged)
