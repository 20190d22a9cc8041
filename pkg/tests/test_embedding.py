from __future__ import annotations

import numpy as np
import pytest

from fairrepair.embedding import (EmbeddingConfig, EmbeddingMatrix,
                                  embed_graph, random_walks, skipgram_train,
                                  spectral_embed, write_embedding_csv)
from fairrepair.graphs import AttributedGraph


def _star(leaves=4):
    A = np.zeros((leaves + 1, leaves + 1))
    A[0, 1:] = 1.0
    A[1:, 0] = 1.0
    return A


def _two_cliques(k=5):
    n = 2 * k
    A = np.zeros((n, n))
    A[:k, :k] = 1.0
    A[k:, k:] = 1.0
    np.fill_diagonal(A, 0.0)
    A[k - 1, k] = A[k, k - 1] = 1.0  # one bridge keeps it connected
    return A


def test_walks_follow_edges_and_cover_all_starts():
    rng = np.random.default_rng(0)
    A = _two_cliques()
    walks = random_walks(A, walk_length=8, walks_per_node=3, rng=rng)
    assert walks.shape == (30, 8)
    starts = np.sort(walks[:, 0])
    np.testing.assert_array_equal(starts, np.repeat(np.arange(10), 3))
    for w in walks:
        for a, b in zip(w, w[1:]):
            if b < 0:
                break
            assert A[a, b] > 0


def test_walks_alternate_on_a_star():
    rng = np.random.default_rng(1)
    walks = random_walks(_star(), walk_length=9, walks_per_node=2, rng=rng)
    for w in walks:
        centre_first = w[0] == 0
        for t, node in enumerate(w):
            if (t % 2 == 0) == centre_first:
                assert node == 0
            else:
                assert node > 0


def test_walks_truncate_at_isolated_nodes():
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1.0  # node 2 is isolated
    rng = np.random.default_rng(2)
    walks = random_walks(A, walk_length=5, walks_per_node=1, rng=rng)
    row = walks[walks[:, 0] == 2][0]
    np.testing.assert_array_equal(row, [2, -1, -1, -1, -1])


def test_walks_respect_edge_weights():
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1.0
    A[0, 2] = A[2, 0] = 9.0
    rng = np.random.default_rng(3)
    walks = random_walks(A, walk_length=40, walks_per_node=300, rng=rng)
    frm, to = walks[:, :-1].ravel(), walks[:, 1:].ravel()
    out_of_0 = to[(frm == 0) & (to >= 0)]
    frac_heavy = (out_of_0 == 2).mean()
    assert abs(frac_heavy - 0.9) < 0.02


def test_walks_deterministic_per_seed():
    A = _two_cliques()
    w1 = random_walks(A, 10, 4, np.random.default_rng(7))
    w2 = random_walks(A, 10, 4, np.random.default_rng(7))
    w3 = random_walks(A, 10, 4, np.random.default_rng(8))
    np.testing.assert_array_equal(w1, w2)
    assert not np.array_equal(w1, w3)


def test_skipgram_separates_two_cliques():
    A = _two_cliques()
    g = AttributedGraph(A, [0] * 5 + [1] * 5)
    cfg = EmbeddingConfig(dim=16, walk_length=10, window=5, walks_per_node=20,
                          epochs=5, seed=0)
    emb = embed_graph(g, cfg)
    Z = emb.vectors / np.linalg.norm(emb.vectors, axis=1, keepdims=True)
    S = Z @ Z.T
    intra = np.r_[S[:5, :5][np.triu_indices(5, 1)],
                  S[5:, 5:][np.triu_indices(5, 1)]]
    inter = S[:5, 5:].ravel()
    assert intra.mean() > inter.mean() + 0.2


def test_skipgram_loss_decreases():
    A = _two_cliques()
    rng = np.random.default_rng(5)
    walks = random_walks(A, 10, 10, rng)
    cfg = EmbeddingConfig(dim=8, window=4, epochs=6, seed=5)
    _, losses = skipgram_train(walks, 10, cfg)
    assert len(losses) == 6
    assert losses[-1] < losses[0]


def test_skipgram_deterministic():
    A = _two_cliques()
    g = AttributedGraph(A, [0] * 5 + [1] * 5)
    cfg = EmbeddingConfig(dim=8, walk_length=8, window=4, walks_per_node=5,
                          epochs=2, seed=11)
    e1 = embed_graph(g, cfg)
    e2 = embed_graph(g, cfg)
    np.testing.assert_array_equal(e1.vectors, e2.vectors)
    e3 = embed_graph(g, EmbeddingConfig(dim=8, walk_length=8, window=4,
                                        walks_per_node=5, epochs=2, seed=12))
    assert not np.array_equal(e1.vectors, e3.vectors)


def test_spectral_complete_graph_is_symmetric():
    # the full (n-1)-dim embedding of K_n is a regular simplex
    n = 4
    A = np.ones((n, n)) - np.eye(n)
    emb = spectral_embed(A, n - 1)
    D = np.linalg.norm(emb.vectors[:, None] - emb.vectors[None, :], axis=2)
    off = D[np.triu_indices(n, 1)]
    np.testing.assert_allclose(off, off[0], rtol=1e-8)


def test_spectral_path_second_eigenvector_is_monotone():
    A = np.zeros((4, 4))
    for i in range(3):
        A[i, i + 1] = A[i + 1, i] = 1.0
    v = spectral_embed(A, 1).vectors[:, 0]
    assert np.all(np.diff(v) < 0)  # sign convention pins the direction


def test_spectral_rejects_dim_too_large():
    A = np.ones((3, 3)) - np.eye(3)
    with pytest.raises(ValueError):
        spectral_embed(A, 3)


def test_embed_graph_dispatch_and_validation():
    g = AttributedGraph(_two_cliques(), [0] * 5 + [1] * 5)
    emb = embed_graph(g, EmbeddingConfig(dim=4, epochs=1), method="spectral")
    assert emb.dim == 4
    with pytest.raises(ValueError):
        embed_graph(g, EmbeddingConfig(), method="poincare")
    with pytest.raises(ValueError):
        EmbeddingConfig(dim=0)
    with pytest.raises(ValueError):
        EmbeddingConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        EmbeddingMatrix(np.array([[np.nan, 0.0]]))


def test_write_embedding_csv(tmp_path):
    emb = EmbeddingMatrix(np.arange(6, dtype=float).reshape(3, 2))
    path = tmp_path / "emb.csv"
    write_embedding_csv(path, emb, node_ids=["a", "b", "c"])
    lines = path.read_text().splitlines()
    assert lines[0] == "node,z0,z1"
    assert lines[1] == "a,0,1"
    assert len(lines) == 4
