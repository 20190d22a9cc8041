"""Group- and individual-fairness metrics for edge predictors.

Pair-level quantities condition on the endpoint labels: a pair is
"cross-group" when its endpoints carry different labels.  With positive
rates p1 (cross) and p0 (within), disparate impact is ``p1 / p0`` and the
balanced error of the implied group test is ``(p1 - p0 + 1) / 2``.  The
single-endpoint variant conditions on the first endpoint's label only.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, asdict

import numpy as np

from .errors import UndefinedMetricError
from .predict import auc, train_logreg

__all__ = ["PairRates", "di_ber", "representation_bias", "consistency",
           "Theorem1Report", "check_theorem1", "check_corollary1",
           "FairnessReport"]


@dataclass
class PairRates:
    """Positive rates and the fairness ratios derived from them.

    ``di_xor`` is nan when no positives fall on within-group pairs;
    ``di_s`` is nan for more than two groups or a zero denominator.
    """

    p1: float          # P(pred = 1 | endpoints in different groups)
    p0: float          # P(pred = 1 | endpoints in the same group)
    di_xor: float
    ber_xor: float
    di_s: float
    n_cross: int
    n_within: int


def di_ber(predictions: np.ndarray, s_u: np.ndarray, s_v: np.ndarray) -> PairRates:
    """Disparate impact and balanced error over a sample of scored pairs.

    ``predictions`` are 0/1 decisions; ``s_u``/``s_v`` are the endpoint
    group labels of each pair.  Both conditioning cells (cross and within)
    must be non-empty.
    """
    pred = np.asarray(predictions).astype(int)
    s_u = np.asarray(s_u, dtype=int)
    s_v = np.asarray(s_v, dtype=int)
    if not (pred.shape == s_u.shape == s_v.shape):
        raise ValueError("predictions and endpoint labels must align")
    cross = s_u != s_v
    n_cross = int(cross.sum())
    n_within = int((~cross).sum())
    if n_cross == 0 or n_within == 0:
        raise UndefinedMetricError("need both cross-group and within-group pairs")
    p1 = float(pred[cross].mean())
    p0 = float(pred[~cross].mean())
    di_xor = p1 / p0 if p0 > 0 else float("nan")
    ber_xor = (p1 - p0 + 1.0) / 2.0

    di_s = float("nan")
    if max(s_u.max(), s_v.max()) <= 1:
        first0 = s_u == 0
        if first0.any() and (~first0).any():
            r0 = float(pred[first0].mean())
            r1 = float(pred[~first0].mean())
            di_s = r0 / r1 if r1 > 0 else float("nan")
    return PairRates(p1, p0, di_xor, ber_xor, di_s, n_cross, n_within)


def representation_bias(emb_vectors: np.ndarray, labels: np.ndarray,
                        folds: int = 10, l2: float = 1e-4, seed: int = 0) -> float:
    """How well the protected attribute can be read off the embedding.

    Mean AUC of a k-fold cross-validated logistic regression predicting the
    label from the embedding rows (one-vs-rest averaged for K > 2).  Around
    0.5 the embedding carries no group information.  Folds that end up with
    a single class are skipped with a warning.
    """
    Z = np.asarray(emb_vectors, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n = Z.shape[0]
    if labels.shape != (n,):
        raise ValueError("labels must align with embedding rows")
    if folds < 2 or folds > n:
        raise ValueError("folds must lie in [2, num_nodes]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[order] = np.arange(n) % folds
    classes = np.unique(labels)
    targets = [1] if classes.size == 2 else list(classes)

    aucs = []
    for f in range(folds):
        test = fold_of == f
        train = ~test
        mu = Z[train].mean(axis=0)
        sd = Z[train].std(axis=0)
        sd[sd == 0] = 1.0
        Ztr = (Z[train] - mu) / sd
        Zte = (Z[test] - mu) / sd
        for cls in targets:
            y_tr = (labels[train] == cls).astype(float)
            y_te = (labels[test] == cls).astype(int)
            if len(set(y_tr)) < 2 or len(set(y_te)) < 2:
                warnings.warn(f"fold {f}: single-class fold skipped for class {cls}")
                continue
            clf = train_logreg(Ztr, y_tr, l2=l2)
            aucs.append(auc(clf.decision(Zte), y_te))
    if not aucs:
        raise UndefinedMetricError("no usable folds for representation bias")
    return float(np.mean(aucs))


def consistency(scores: np.ndarray, features: np.ndarray, k: int = 10) -> float:
    """Individual fairness of a scorer: 1 minus the mean absolute score gap
    between each item and its k nearest neighbours in feature space
    (Euclidean, ties broken by lower index)."""
    s = np.asarray(scores, dtype=float)
    F = np.asarray(features, dtype=float)
    n = s.size
    if F.shape[0] != n:
        raise ValueError("scores and features must align")
    if not 1 <= k < n:
        raise ValueError("k must satisfy 1 <= k < n")
    sq = (F * F).sum(1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (F @ F.T)
    np.fill_diagonal(d2, np.inf)
    nbrs = np.argsort(d2, axis=1, kind="stable")[:, :k]
    gaps = np.abs(s[:, None] - s[nbrs])
    return float(1.0 - gaps.mean())


@dataclass
class Theorem1Report:
    """Empirical check that cross-group disparate impact is bounded by the
    single-endpoint version when groups are balanced (a1) and predictions
    favour within-group pairs (a2)."""

    di_xor: float
    di_s: float
    p1: float
    p0: float
    a1_ok: bool
    a2_ok: bool
    holds: bool | None   # None when the assumptions fail (nothing asserted)


def _pair_rates_full(labels: np.ndarray, pred: np.ndarray):
    """Rates over all ordered pairs (u, v), u != v, of a symmetric predictor."""
    n = labels.size
    mask = ~np.eye(n, dtype=bool)
    same = labels[:, None] == labels[None, :]
    p1_cell = pred[mask & ~same]
    p0_cell = pred[mask & same]
    if p1_cell.size == 0 or p0_cell.size == 0:
        raise UndefinedMetricError("need both cross and within ordered pairs")
    return float(p1_cell.mean()), float(p0_cell.mean()), mask, same


def check_theorem1(labels: np.ndarray, predictions: np.ndarray,
                   balance_tol: float = 0.05) -> Theorem1Report:
    """Evaluate the DI comparison on one labelled graph and predictor.

    ``predictions`` is a symmetric 0/1 matrix over all node pairs (the
    diagonal is ignored).  a1 requires both group shares within
    ``balance_tol`` of one half; a2 requires, for each group, the
    within-group positive rate to be at least the cross-group rate.
    ``holds`` reports ``di_xor <= di_s`` only when both gates pass.
    """
    labels = np.asarray(labels, dtype=int)
    pred = np.asarray(predictions)
    n = labels.size
    if pred.shape != (n, n):
        raise ValueError("predictions must be an N x N matrix")
    if np.any(pred != pred.T):
        raise ValueError("predictions must be symmetric")
    if labels.max() > 1 or labels.min() < 0:
        raise ValueError("theorem check is defined for binary labels")
    pred = pred.astype(float)

    p1, p0, mask, same = _pair_rates_full(labels, pred)
    share0 = float((labels == 0).mean())
    a1_ok = abs(share0 - 0.5) <= balance_tol

    a2_ok = True
    for s in (0, 1):
        rows = labels == s
        within = pred[np.ix_(rows, rows)]
        within = within[~np.eye(int(rows.sum()), dtype=bool)]
        across = pred[np.ix_(rows, ~rows)]
        if within.size == 0 or across.size == 0:
            a2_ok = False
            break
        if within.mean() < across.mean() - 1e-12:
            a2_ok = False
            break

    di_xor = p1 / p0 if p0 > 0 else float("nan")
    rates = []
    for s in (0, 1):
        rows = labels == s
        cell = pred[rows][mask[rows]]
        rates.append(float(cell.mean()) if cell.size else float("nan"))
    di_s = rates[0] / rates[1] if rates[1] > 0 else float("nan")

    gates = a1_ok and a2_ok
    holds: bool | None = None
    if gates and np.isfinite(di_xor) and np.isfinite(di_s):
        holds = bool(di_xor <= di_s + 1e-9)
    return Theorem1Report(di_xor, di_s, p1, p0, a1_ok, a2_ok, holds)


def check_corollary1(p1: float, ber_xor: float, tau: float) -> dict:
    """Check the balanced-error bound implied by a disparate-impact cap.

    ``tau`` must lie in (0, 1]; the bound is
    ``ber <= 1/2 - (p1 / 2) * (1 / tau - 1)``.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    if not 0.0 <= p1 <= 1.0:
        raise ValueError("p1 must be a probability")
    bound = 0.5 - (p1 / 2.0) * (1.0 / tau - 1.0)
    return {"bound": float(bound), "ber_xor": float(ber_xor),
            "holds": bool(ber_xor <= bound + 1e-9)}


@dataclass
class FairnessReport:
    """Metric bundle for one experiment run, serialisable to JSON/CSV."""

    di_xor: float
    di_s: float
    ber_xor: float
    p1: float
    p0: float
    consistency: float
    representation_bias: float
    assortativity: float
    link_auc: float
    added_mass: float = 0.0

    CSV_FIELDS = ("di_xor", "di_s", "ber_xor", "p1", "p0", "consistency",
                  "representation_bias", "assortativity", "link_auc",
                  "added_mass")

    def to_json(self, path=None) -> str:
        text = json.dumps(asdict(self), indent=2, sort_keys=True,
                          default=float) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def csv_row(self) -> str:
        return ",".join(f"{getattr(self, f):.10g}" for f in self.CSV_FIELDS)
