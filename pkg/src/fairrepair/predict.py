"""Link prediction on (optionally repaired) graphs.

Protocol: hold out a fraction of edges, sample an equal number of
never-present pairs as negatives, embed the training graph, featurise node
pairs by the Hadamard product of their embeddings, fit a logistic
regression and score the held-out pairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding import EmbeddingConfig, EmbeddingMatrix, embed_graph
from .errors import DataError, UndefinedMetricError
from .graphs import AttributedGraph
from .repair import RepairConfig, RepairResult, repair_graph

__all__ = ["EdgeSplit", "Classifier", "split_edges", "hadamard_features",
           "train_logreg", "auc", "PipelineResult", "link_prediction_pipeline",
           "write_scores_csv"]


@dataclass
class EdgeSplit:
    """Train graph plus train/test pair sets with binary labels."""

    train_adjacency: np.ndarray
    train_pairs: np.ndarray   # (P, 2) int
    train_labels: np.ndarray  # (P,) 0/1
    test_pairs: np.ndarray
    test_labels: np.ndarray


def split_edges(g: AttributedGraph, test_fraction: float = 0.2,
                seed: int = 0) -> EdgeSplit:
    """Hold out ``test_fraction`` of the edges for evaluation.

    Held-out edges are chosen in a seeded random order, preferring edges
    whose removal leaves both endpoints with positive degree (a node is
    only disconnected when the quota cannot be met otherwise).  Negative
    pairs (never-edges) are sampled without replacement: one per held-out
    edge for the test set and one per remaining edge for the training set.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    A = g.adjacency
    n = g.num_nodes
    iu, ju = np.triu_indices(n, k=1)
    present = A[iu, ju] > 0
    edges = np.flatnonzero(present)
    if edges.size == 0:
        raise DataError("graph has no edges to split")
    n_test = int(round(test_fraction * edges.size))
    n_test = max(1, min(n_test, edges.size - 1))

    rng = np.random.default_rng(seed)
    order = rng.permutation(edges)
    deg = (A > 0).sum(axis=1).astype(int)
    chosen: list[int] = []
    skipped: list[int] = []
    for k in order:
        if len(chosen) == n_test:
            break
        u, v = int(iu[k]), int(ju[k])
        if deg[u] > 1 and deg[v] > 1:
            chosen.append(k)
            deg[u] -= 1
            deg[v] -= 1
        else:
            skipped.append(k)
    for k in skipped:  # quota not reachable without isolating nodes
        if len(chosen) == n_test:
            break
        chosen.append(k)
    test_edges = np.array(sorted(chosen), dtype=int)
    train_mask = present.copy()
    train_mask[test_edges] = False
    train_edges = np.flatnonzero(train_mask)

    absent = np.flatnonzero(~present)
    need = test_edges.size + train_edges.size
    if absent.size < need:
        raise DataError(f"not enough absent pairs to sample negatives "
                        f"(need {need}, have {absent.size})")
    neg = rng.choice(absent, size=need, replace=False)
    test_neg, train_neg = neg[:test_edges.size], neg[test_edges.size:]

    train_adj = A.copy()
    tu, tv = iu[test_edges], ju[test_edges]
    train_adj[tu, tv] = 0.0
    train_adj[tv, tu] = 0.0

    def pairs_of(ks: np.ndarray) -> np.ndarray:
        return np.column_stack([iu[ks], ju[ks]]).astype(int)

    train_pairs = np.vstack([pairs_of(train_edges), pairs_of(train_neg)])
    train_labels = np.r_[np.ones(train_edges.size), np.zeros(train_neg.size)]
    test_pairs = np.vstack([pairs_of(test_edges), pairs_of(test_neg)])
    test_labels = np.r_[np.ones(test_edges.size), np.zeros(test_neg.size)]
    return EdgeSplit(train_adj, train_pairs, train_labels, test_pairs, test_labels)


def hadamard_features(emb: EmbeddingMatrix, pairs: np.ndarray) -> np.ndarray:
    """Element-wise product of the two endpoint embeddings."""
    pairs = np.asarray(pairs, dtype=int)
    return emb.vectors[pairs[:, 0]] * emb.vectors[pairs[:, 1]]


@dataclass
class Classifier:
    """Logistic regression weights (bias unregularised)."""

    weights: np.ndarray
    bias: float
    converged: bool = True
    n_iter: int = 0

    def decision(self, F: np.ndarray) -> np.ndarray:
        return F @ self.weights + self.bias

    def predict_proba(self, F: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision(F))

    def predict(self, F: np.ndarray) -> np.ndarray:
        return (self.decision(F) >= 0).astype(int)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logloss_grad(w, b, F, y, l2):
    z = F @ w + b
    # log(1 + exp(-m)) with m = z for y=1, -z for y=0, computed stably
    m = np.where(y > 0, z, -z)
    loss = np.logaddexp(0.0, -m).mean() + 0.5 * l2 * float(w @ w)
    p = _sigmoid(z)
    r = p - y
    gw = F.T @ r / y.size + l2 * w
    gb = float(r.mean())
    return loss, gw, gb


def train_logreg(F: np.ndarray, y: np.ndarray, l2: float = 1e-4,
                 max_iters: int = 200, grad_tol: float = 1e-7) -> Classifier:
    """Full-batch gradient descent with Armijo backtracking line search.

    Deterministic (zero initialisation, no sampling).  Stops when the
    gradient is small or after ``max_iters`` accepted steps.
    """
    F = np.asarray(F, dtype=float)
    y = np.asarray(y, dtype=float)
    if F.ndim != 2 or y.shape != (F.shape[0],):
        raise ValueError("features must be (P, d) with one label per row")
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    w = np.zeros(F.shape[1])
    b = 0.0
    step = 1.0
    loss, gw, gb = _logloss_grad(w, b, F, y, l2)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        g2 = float(gw @ gw) + gb * gb
        if np.sqrt(g2) < grad_tol:
            converged = True
            break
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss, gw_new, gb_new = _logloss_grad(w_new, b_new, F, y, l2)
            if new_loss <= loss - 1e-4 * step * g2:
                break
            step *= 0.5
            if step < 1e-12:
                break
        if step < 1e-12:
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, gw_new, gb_new
        step = min(step * 2.0, 1e4)
    return Classifier(w, b, converged, it)


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve (Mann-Whitney form, ties count half)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    # average ranks over tied blocks
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    r_pos = ranks[pos].sum()
    return float((r_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass
class PipelineResult:
    split: EdgeSplit
    repair: RepairResult | None
    embedding: EmbeddingMatrix
    classifier: Classifier
    scores: np.ndarray           # probabilities for the test pairs
    test_auc: float
    graph: AttributedGraph       # the (repaired) training graph
    extras: dict = field(default_factory=dict)


def link_prediction_pipeline(g: AttributedGraph,
                             repair_cfg: RepairConfig | None,
                             embed_cfg: EmbeddingConfig,
                             test_fraction: float = 0.2,
                             seed: int = 0,
                             embed_method: str = "skipgram",
                             random_target_mass: float | None = None) -> PipelineResult:
    """Split, optionally repair the training graph, embed, fit, score."""
    split = split_edges(g, test_fraction, seed)
    train_graph = g.with_adjacency(split.train_adjacency)
    repair_result = None
    if repair_cfg is not None:
        repair_result = repair_graph(train_graph, repair_cfg, random_target_mass)
        train_graph = repair_result.repaired
    emb = embed_graph(train_graph, embed_cfg, embed_method)
    clf = train_logreg(hadamard_features(emb, split.train_pairs), split.train_labels)
    scores = clf.predict_proba(hadamard_features(emb, split.test_pairs))
    return PipelineResult(
        split=split,
        repair=repair_result,
        embedding=emb,
        classifier=clf,
        scores=scores,
        test_auc=auc(scores, split.test_labels),
        graph=train_graph,
    )


def write_scores_csv(path, result: PipelineResult, labels: np.ndarray,
                     node_ids: list[str] | None = None) -> None:
    """Test-pair scores with endpoint group labels, one row per pair."""
    ids = node_ids or [str(i) for i in range(labels.size)]
    with open(path, "w") as fh:
        fh.write("u,v,label,score,s_u,s_v\n")
        for (u, v), y, s in zip(result.split.test_pairs,
                                result.split.test_labels, result.scores):
            fh.write(f"{ids[u]},{ids[v]},{int(y)},{s:.10g},"
                     f"{int(labels[u])},{int(labels[v])}\n")
