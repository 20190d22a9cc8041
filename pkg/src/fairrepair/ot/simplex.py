"""Primal network simplex specialised to the dense transportation problem.

Solves  min <plan, cost>  over plans with fixed row sums ``a`` and column
sums ``b`` (a.sum() == b.sum(), all entries > 0).  The basis is a spanning
tree over sources, sinks and an artificial root node; the leaving-arc rule
keeps the tree strongly feasible, which rules out cycling on the highly
degenerate instances that uniform marginals produce.  Entering arcs are
picked by most-negative reduced cost with the pricing step vectorised over
the full cost matrix.

Costs may be negative (the regularised solver prices its search direction
with a gradient matrix); only finiteness is required here.
"""
from __future__ import annotations

import numpy as np

from ..errors import NumericalError

__all__ = ["transport"]


def transport(cost: np.ndarray, a: np.ndarray, b: np.ndarray,
              max_pivots: int | None = None) -> tuple[np.ndarray, float]:
    """Return ``(plan, objective)`` for the transportation problem.

    ``cost`` is (m, n); ``a`` (m,) and ``b`` (n,) are strictly positive with
    equal sums.  The returned plan is a vertex of the transportation
    polytope (at most m + n - 1 nonzero entries).
    """
    cost = np.ascontiguousarray(cost, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = cost.shape
    if a.shape != (m,) or b.shape != (n,):
        raise ValueError("marginal shapes do not match the cost matrix")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    if a.min() <= 0 or b.min() <= 0:
        raise ValueError("marginals must be strictly positive")
    if abs(a.sum() - b.sum()) > 1e-7 * max(1.0, a.sum()):
        raise ValueError("marginals must have equal total mass")

    num_nodes = m + n          # real nodes; sources 0..m-1, sinks m..m+n-1
    root = num_nodes
    n_real = m * n             # real arc e: (e // n) -> m + (e % n)
    c_max = float(np.abs(cost).max()) if cost.size else 0.0
    faux_inf = 3.0 * (1.0 + c_max) * (num_nodes + 1)
    eps = 1e-11 * (1.0 + c_max)
    if max_pivots is None:
        max_pivots = 1000 + 200 * num_nodes * max(8, int(np.sqrt(num_nodes)))

    # flows on real arcs (matrix form) and on the m + n artificial arcs
    x = np.zeros((m, n))
    x_art = np.concatenate([a, b]).astype(float)

    # potentials; pi chosen so every basic (artificial) arc has zero
    # reduced cost: source arcs run node->root, sink arcs root->node
    pi = np.empty(num_nodes + 1)
    pi[:m] = faux_inf
    pi[m:num_nodes] = -faux_inf
    pi[root] = 0.0

    # spanning tree state: parent pointers plus a depth-first thread
    parent = np.full(num_nodes + 1, root, dtype=np.int64)
    parent[root] = -1
    pedge = np.arange(num_nodes + 1, dtype=np.int64) + n_real  # arc to parent
    pedge[root] = -1
    size = np.ones(num_nodes + 1, dtype=np.int64)
    size[root] = num_nodes + 1
    nxt = np.empty(num_nodes + 1, dtype=np.int64)
    prv = np.empty(num_nodes + 1, dtype=np.int64)
    nxt[root] = 0
    nxt[:num_nodes] = np.arange(1, num_nodes + 1)
    nxt[num_nodes - 1] = root
    prv[0] = root
    prv[1:num_nodes] = np.arange(num_nodes - 1)
    prv[root] = num_nodes - 1
    last = np.arange(num_nodes + 1, dtype=np.int64)
    last[root] = num_nodes - 1

    def tail_head(e: int) -> tuple[int, int]:
        if e < n_real:
            return e // n, m + e % n
        t = e - n_real
        return (t, root) if t < m else (root, t)

    def ecost(e: int) -> float:
        return cost[e // n, e % n] if e < n_real else faux_inf

    def eflow(e: int) -> float:
        return x[e // n, e % n] if e < n_real else x_art[e - n_real]

    def add_flow(e: int, f: float) -> None:
        if e < n_real:
            x[e // n, e % n] += f
        else:
            x_art[e - n_real] += f

    def set_flow(e: int, f: float) -> None:
        if e < n_real:
            x[e // n, e % n] = f
        else:
            x_art[e - n_real] = f

    def find_apex(p: int, q: int) -> int:
        sp, sq = size[p], size[q]
        while True:
            while sp < sq:
                p = parent[p]
                sp = size[p]
            while sp > sq:
                q = parent[q]
                sq = size[q]
            if sp == sq:
                if p != q:
                    p = parent[p]
                    sp = size[p]
                    q = parent[q]
                    sq = size[q]
                else:
                    return p

    def trace_path(p: int, w: int) -> tuple[list[int], list[int]]:
        nodes = [p]
        edges: list[int] = []
        while p != w:
            edges.append(pedge[p])
            p = parent[p]
            nodes.append(p)
        return nodes, edges

    def find_cycle(e: int, p: int, q: int) -> tuple[list[int], list[int]]:
        # cycle traversed in the direction of flow increase, starting at
        # the apex;每 edge is paired with its tail node in that direction
        w = find_apex(p, q)
        nodes, edges = trace_path(p, w)
        nodes.reverse()
        edges.reverse()
        edges.append(e)
        nodes_r, edges_r = trace_path(q, w)
        del nodes_r[-1]
        nodes += nodes_r
        edges += edges_r
        return nodes, edges

    def residual(e: int, t: int) -> float:
        te, _ = tail_head(e)
        return np.inf if te == t else eflow(e)

    def subtree_nodes(p: int) -> list[int]:
        out = [p]
        l = last[p]
        while p != l:
            p = nxt[p]
            out.append(p)
        return out

    def remove_edge(s: int, t: int) -> None:
        size_t = size[t]
        prev_t = prv[t]
        last_t = last[t]
        next_last_t = nxt[last_t]
        parent[t] = -1
        pedge[t] = -1
        nxt[prev_t] = next_last_t
        prv[next_last_t] = prev_t
        nxt[last_t] = t
        prv[t] = last_t
        while s != -1:
            size[s] -= size_t
            if last[s] == last_t:
                last[s] = prev_t
            s = parent[s]

    def make_root(q: int) -> None:
        ancestors = []
        node = q
        while node != -1:
            ancestors.append(node)
            node = parent[node]
        ancestors.reverse()
        for p_, q_ in zip(ancestors, ancestors[1:]):
            size_p = size[p_]
            last_p = last[p_]
            prev_q = prv[q_]
            last_q = last[q_]
            next_last_q = nxt[last_q]
            parent[p_] = q_
            parent[q_] = -1
            pedge[p_] = pedge[q_]
            pedge[q_] = -1
            size[p_] = size_p - size[q_]
            size[q_] = size_p
            nxt[prev_q] = next_last_q
            prv[next_last_q] = prev_q
            nxt[last_q] = q_
            prv[q_] = last_q
            if last_p == last_q:
                last[p_] = prev_q
                last_p = prev_q
            prv[p_] = last_q
            nxt[last_q] = p_
            nxt[last_p] = q_
            prv[q_] = last_p
            last[q_] = last_p

    def add_edge(e: int, p: int, q: int) -> None:
        last_p = last[p]
        next_last_p = nxt[last_p]
        size_q = size[q]
        last_q = last[q]
        parent[q] = p
        pedge[q] = e
        nxt[last_p] = q
        prv[q] = last_p
        prv[next_last_p] = last_q
        nxt[last_q] = next_last_p
        while p != -1:
            size[p] += size_q
            if last[p] == last_p:
                last[p] = last_q
            p = parent[p]

    def update_potentials(e: int, p: int, q: int) -> None:
        _, he = tail_head(e)
        if q == he:
            d = pi[p] - ecost(e) - pi[q]
        else:
            d = pi[p] + ecost(e) - pi[q]
        for node in subtree_nodes(q):
            pi[node] += d

    pivots = 0
    while True:
        # pricing: most negative reduced cost over all real arcs
        red = cost - pi[:m, None] + pi[None, m:num_nodes]
        e = int(np.argmin(red))
        if red.flat[e] >= -eps:
            break
        pivots += 1
        if pivots > max_pivots:
            raise NumericalError("transportation simplex exceeded pivot limit")
        p, q = e // n, m + e % n
        nodes, edges = find_cycle(e, p, q)
        # leaving arc: first minimum-residual arc scanning the cycle
        # backwards from the apex (keeps the basis strongly feasible)
        j = s = None
        best = np.inf
        for e_k, t_k in zip(reversed(edges), reversed(nodes)):
            r = residual(e_k, t_k)
            if r < best:
                best = r
                j, s = e_k, t_k
        if best > 0.0:
            for e_k, t_k in zip(edges, nodes):
                te, _ = tail_head(e_k)
                add_flow(e_k, best if te == t_k else -best)
            for e_k in edges:
                if eflow(e_k) < 0.0:
                    set_flow(e_k, 0.0)
        set_flow(j, 0.0)
        if j != e:
            tj, hj = tail_head(j)
            if parent[hj] != tj:
                s_, t_ = hj, tj
            else:
                s_, t_ = tj, hj
            if edges.index(e) > edges.index(j):
                p, q = q, p
            remove_edge(s_, t_)
            make_root(q)
            add_edge(e, p, q)
            update_potentials(e, p, q)

    if x_art.max(initial=0.0) > 1e-9 * max(1.0, a.sum()):
        raise NumericalError("transportation solve left residual artificial flow")
    return x, float((x * cost).sum())
