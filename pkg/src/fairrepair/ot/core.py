"""Cost matrices and exact earth-mover couplings between point clouds."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .simplex import transport

__all__ = ["CostMatrix", "Coupling", "cost_matrix", "solve_emd", "METRICS"]

METRICS = ("sqeuclidean", "hamming")

_MARGINAL_TOL = 1e-7


@dataclass
class CostMatrix:
    """Pairwise ground costs between two row sets; entries finite and >= 0."""

    matrix: np.ndarray
    metric: str = "sqeuclidean"

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2:
            raise ValueError("cost matrix must be 2-dimensional")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("cost matrix must be finite")
        if self.matrix.size and self.matrix.min() < 0:
            raise ValueError("cost matrix must be non-negative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape


@dataclass
class Coupling:
    """A transport plan with its marginals and transport objective."""

    matrix: np.ndarray
    source: np.ndarray
    target: np.ndarray
    objective: float

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.source = np.asarray(self.source, dtype=float)
        self.target = np.asarray(self.target, dtype=float)
        if self.matrix.shape != (self.source.size, self.target.size):
            raise ValueError("coupling shape does not match the marginals")
        if self.matrix.size and self.matrix.min() < -1e-12:
            raise ValueError("coupling entries must be non-negative")
        if np.abs(self.matrix.sum(axis=1) - self.source).max(initial=0.0) > _MARGINAL_TOL:
            raise ValueError("row sums do not match the source marginal")
        if np.abs(self.matrix.sum(axis=0) - self.target).max(initial=0.0) > _MARGINAL_TOL:
            raise ValueError("column sums do not match the target marginal")

    def row_normalised(self) -> np.ndarray:
        """Rows rescaled to sum to one (a soft assignment source -> target)."""
        s = self.matrix.sum(axis=1, keepdims=True)
        if np.any(s <= 0):
            raise ValueError("cannot row-normalise a coupling with empty rows")
        return self.matrix / s


def cost_matrix(X0: np.ndarray, X1: np.ndarray, metric: str = "sqeuclidean") -> CostMatrix:
    """Pairwise cost between rows of ``X0`` and rows of ``X1``.

    ``sqeuclidean`` is the squared Euclidean distance; ``hamming`` the
    fraction of coordinates that differ.
    """
    X0 = np.asarray(X0, dtype=float)
    X1 = np.asarray(X1, dtype=float)
    if X0.ndim != 2 or X1.ndim != 2 or X0.shape[1] != X1.shape[1]:
        raise ValueError("inputs must be 2-d with a common feature dimension")
    if metric == "sqeuclidean":
        sq0 = (X0 * X0).sum(1)
        sq1 = (X1 * X1).sum(1)
        M = sq0[:, None] + sq1[None, :] - 2.0 * (X0 @ X1.T)
        np.clip(M, 0.0, None, out=M)
    elif metric == "hamming":
        M = (X0[:, None, :] != X1[None, :, :]).mean(axis=2)
    else:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    return CostMatrix(M, metric)


def _check_marginal(w: np.ndarray, size: int, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (size,):
        raise ValueError(f"{name} marginal has shape {w.shape}, expected ({size},)")
    if w.min(initial=0.0) < 0:
        raise ValueError(f"{name} marginal must be non-negative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} marginal must sum to 1 (got {w.sum():.12f})")
    return w


def solve_emd(cost: CostMatrix | np.ndarray,
              source: np.ndarray | None = None,
              target: np.ndarray | None = None) -> Coupling:
    """Exact optimal transport between two probability vectors.

    Marginals default to uniform.  The result is an extreme point of the
    transportation polytope, so it has at most ``m + n - 1`` nonzeros.
    """
    M = cost.matrix if isinstance(cost, CostMatrix) else CostMatrix(cost).matrix
    m, n = M.shape
    a = np.full(m, 1.0 / m) if source is None else _check_marginal(source, m, "source")
    b = np.full(n, 1.0 / n) if target is None else _check_marginal(target, n, "target")
    plan, obj = _transport_any(M, a, b)
    return Coupling(plan, a, b, obj)


def _transport_any(M: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Transportation solve that tolerates zero-mass rows/columns."""
    keep_r = a > 0
    keep_c = b > 0
    if keep_r.all() and keep_c.all():
        b_adj = b * (a.sum() / b.sum())
        return transport(M, a, b_adj)
    sub_a = a[keep_r]
    sub_b = b[keep_c] * (sub_a.sum() / b[keep_c].sum())
    sub_plan, obj = transport(M[np.ix_(keep_r, keep_c)], sub_a, sub_b)
    plan = np.zeros_like(M)
    plan[np.ix_(keep_r, keep_c)] = sub_plan
    return plan, obj
