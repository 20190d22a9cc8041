"""Node embeddings from weighted random walks + skip-gram with negative
sampling, plus a deterministic spectral alternative.

The walk sampler follows edge weights (first-order walks, no in/out bias).
Training is plain SGNS over co-occurrence pairs within a fixed window; the
hot loop is JIT-compiled and all randomness (walk steps, pair order,
negative samples) is pre-drawn from a single seeded generator, so results
are reproducible bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .graphs import AttributedGraph, laplacian

__all__ = ["EmbeddingConfig", "EmbeddingMatrix", "random_walks",
           "skipgram_train", "spectral_embed", "embed_graph",
           "write_embedding_csv"]


@dataclass
class EmbeddingConfig:
    dim: int = 64
    walk_length: int = 15
    window: int = 10
    walks_per_node: int = 10
    negatives: int = 5
    epochs: int = 1
    learning_rate: float = 0.08
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.dim, self.walk_length, self.window,
               self.walks_per_node, self.negatives, self.epochs) < 1:
            raise ValueError("all size parameters must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class EmbeddingMatrix:
    """One embedding row per node, in node-index order."""

    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be 2-dimensional")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("vectors must be finite")

    @property
    def num_nodes(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@njit(cache=True)
def _walk_kernel(indptr, neighbours, cumw, starts, randoms, out):  # pragma: no cover
    for w in range(starts.shape[0]):
        cur = starts[w]
        out[w, 0] = cur
        for t in range(1, out.shape[1]):
            lo = indptr[cur]
            hi = indptr[cur + 1]
            if hi == lo:  # dead end: truncate the walk
                for rest in range(t, out.shape[1]):
                    out[w, rest] = -1
                break
            pos = np.searchsorted(cumw[lo:hi], randoms[w, t - 1])
            if pos >= hi - lo:
                pos = hi - lo - 1
            cur = neighbours[lo + pos]
            out[w, t] = cur
    return out


def random_walks(adjacency: np.ndarray, walk_length: int, walks_per_node: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Weight-proportional random walks from every node.

    Returns an int32 array of shape (n * walks_per_node, walk_length) where
    -1 marks positions past a dead end (so an isolated node yields a walk
    containing just itself).  Start nodes are shuffled per pass.
    """
    A = np.asarray(adjacency, dtype=float)
    n = A.shape[0]
    if walk_length < 1:
        raise ValueError("walk_length must be >= 1")
    indptr = np.zeros(n + 1, dtype=np.int64)
    neigh_parts = []
    cum_parts = []
    for i in range(n):
        nz = np.flatnonzero(A[i] > 0)
        indptr[i + 1] = indptr[i] + nz.size
        if nz.size:
            w = np.cumsum(A[i, nz])
            w /= w[-1]
            w[-1] = 1.0
            neigh_parts.append(nz)
            cum_parts.append(w)
    neighbours = (np.concatenate(neigh_parts) if neigh_parts
                  else np.zeros(0, dtype=np.int64)).astype(np.int64)
    cumw = np.concatenate(cum_parts) if cum_parts else np.zeros(0)

    starts = np.concatenate([rng.permutation(n) for _ in range(walks_per_node)])
    randoms = rng.random((starts.size, max(walk_length - 1, 1)))
    out = np.empty((starts.size, walk_length), dtype=np.int32)
    _walk_kernel(indptr, neighbours, cumw, starts.astype(np.int64), randoms, out)
    return out


def _pairs_from_walks(walks: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    centers = []
    contexts = []
    for off in range(1, window + 1):
        if off >= walks.shape[1]:
            break
        a = walks[:, :-off].ravel()
        b = walks[:, off:].ravel()
        ok = (a >= 0) & (b >= 0)
        a, b = a[ok], b[ok]
        centers.append(a)
        contexts.append(b)
        centers.append(b)
        contexts.append(a)
    if not centers:
        return (np.zeros(0, dtype=np.int32),) * 2
    return (np.concatenate(centers).astype(np.int32),
            np.concatenate(contexts).astype(np.int32))


@njit(cache=True)
def _sgns_epoch(w_in, w_out, centers, contexts, negatives,
                lr0, lr_min, step0, total_steps):  # pragma: no cover
    dim = w_in.shape[1]
    n_pairs = centers.shape[0]
    n_neg = negatives.shape[1]
    loss = 0.0
    grad_h = np.empty(dim)
    for p in range(n_pairs):
        frac = (step0 + p) / total_steps
        lr = lr0 + (lr_min - lr0) * frac
        c = centers[p]
        for k in range(dim):
            grad_h[k] = 0.0
        for j in range(-1, n_neg):
            o = contexts[p] if j < 0 else negatives[p, j]
            score = 0.0
            for k in range(dim):
                score += w_in[c, k] * w_out[o, k]
            if score > 35.0:
                score = 35.0
            elif score < -35.0:
                score = -35.0
            sig = 1.0 / (1.0 + math.exp(-score))
            if j < 0:
                loss -= math.log(sig + 1e-12)
                g = sig - 1.0
            else:
                loss -= math.log(1.0 - sig + 1e-12)
                g = sig
            for k in range(dim):
                grad_h[k] += g * w_out[o, k]
                w_out[o, k] -= lr * g * w_in[c, k]
        for k in range(dim):
            w_in[c, k] -= lr * grad_h[k]
    return loss


def skipgram_train(walks: np.ndarray, num_nodes: int,
                   cfg: EmbeddingConfig) -> tuple[EmbeddingMatrix, list[float]]:
    """Train SGNS embeddings on a walk corpus.

    Negatives are drawn from the unigram distribution raised to 3/4.  The
    learning rate decays linearly over all updates.  Returns the input
    vectors and the mean loss per epoch.
    """
    rng = np.random.default_rng(cfg.seed)
    centers, contexts = _pairs_from_walks(walks, cfg.window)
    n_pairs = centers.size
    w_in = (rng.random((num_nodes, cfg.dim)) - 0.5) / cfg.dim
    w_out = np.zeros((num_nodes, cfg.dim))
    if n_pairs == 0:
        return EmbeddingMatrix(w_in), []

    counts = np.bincount(walks[walks >= 0].ravel(), minlength=num_nodes).astype(float)
    probs = counts ** 0.75
    probs /= probs.sum()
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0

    lr_min = min(1e-4, cfg.learning_rate)
    total = cfg.epochs * n_pairs
    losses = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_pairs)
        negs = np.searchsorted(cdf, rng.random((n_pairs, cfg.negatives))).astype(np.int32)
        loss = _sgns_epoch(w_in, w_out, centers[order], contexts[order], negs,
                           cfg.learning_rate, lr_min, epoch * n_pairs, total)
        losses.append(loss / n_pairs)
    return EmbeddingMatrix(w_in), losses


def spectral_embed(adjacency: np.ndarray, dim: int) -> EmbeddingMatrix:
    """Eigenvectors of the graph Laplacian for the smallest non-trivial
    eigenvalues, with a fixed sign convention for determinism."""
    A = np.asarray(adjacency, dtype=float)
    n = A.shape[0]
    if dim >= n:
        raise ValueError("dim must be smaller than the number of nodes")
    vals, vecs = np.linalg.eigh(laplacian(A))
    Z = vecs[:, 1:dim + 1].copy()
    for col in range(Z.shape[1]):
        lead = np.argmax(np.abs(Z[:, col]))
        if Z[lead, col] < 0:
            Z[:, col] = -Z[:, col]
    return EmbeddingMatrix(Z)


def embed_graph(g: AttributedGraph, cfg: EmbeddingConfig,
                method: str = "skipgram") -> EmbeddingMatrix:
    """Embed an attributed graph by the configured method."""
    if method == "skipgram":
        rng = np.random.default_rng(cfg.seed)
        walks = random_walks(g.adjacency, cfg.walk_length, cfg.walks_per_node, rng)
        emb, _ = skipgram_train(walks, g.num_nodes, cfg)
        return emb
    if method == "spectral":
        return spectral_embed(g.adjacency, min(cfg.dim, g.num_nodes - 1))
    raise ValueError(f"unknown embedding method {method!r}")


def write_embedding_csv(path, emb: EmbeddingMatrix,
                        node_ids: list[str] | None = None) -> None:
    ids = node_ids or [str(i) for i in range(emb.num_nodes)]
    with open(path, "w") as fh:
        fh.write("node," + ",".join(f"z{k}" for k in range(emb.dim)) + "\n")
        for i, tok in enumerate(ids):
            row = ",".join(f"{v:.10g}" for v in emb.vectors[i])
            fh.write(f"{tok},{row}\n")
