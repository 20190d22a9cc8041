from __future__ import annotations

import numpy as np
import pytest

from fairrepair.errors import NumericalError
from fairrepair.graphs import knn_graph, laplacian
from fairrepair.ot import (CostMatrix, QuadraticTerm, RegularizedProblem,
                           RegularizedSolution, solve_emd, solve_laplacian_ot)
from oracles import fd_gradient, random_feasible_coupling


def _random_problem(rng, m, n, lam, n_terms=2):
    M = CostMatrix(rng.random((m, n)) * 2)
    terms = []
    for t in range(n_terms):
        side = "row" if t % 2 == 0 else "col"
        p = m if side == "row" else n
        q = n if side == "row" else m
        W = rng.random((p, p))
        W = (W + W.T) / 2
        np.fill_diagonal(W, 0)
        B = rng.normal(size=(q, q + 1))
        terms.append(QuadraticTerm(laplacian=laplacian(W), gram=B @ B.T,
                                   weight=float(rng.integers(1, 5)), side=side))
    return RegularizedProblem(M, terms, lam)


def test_quadratic_term_value_matches_trace_formula():
    rng = np.random.default_rng(0)
    W = rng.random((4, 4)); W = (W + W.T) / 2; np.fill_diagonal(W, 0)
    L = laplacian(W)
    B = rng.normal(size=(3, 3)); G = B @ B.T
    P = rng.random((4, 3))
    row = QuadraticTerm(L, G, weight=2.0, side="row")
    assert row.value(P) == pytest.approx(4.0 * np.trace(P.T @ L @ P @ G))
    col = QuadraticTerm(L + np.eye(4), G, weight=3.0, side="col")
    assert col.value(P.T) == pytest.approx(
        9.0 * np.trace(P.T @ (L + np.eye(4)) @ P @ G))


def test_quadratic_term_validation():
    with pytest.raises(ValueError):
        QuadraticTerm(np.zeros((2, 3)), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        QuadraticTerm(np.array([[0, 1.0], [0, 0]]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        QuadraticTerm(np.zeros((2, 2)), np.zeros((2, 2)), weight=-1.0)
    with pytest.raises(ValueError):
        QuadraticTerm(np.zeros((2, 2)), np.zeros((2, 2)), side="diag")
    term = QuadraticTerm(np.eye(3), np.eye(4), side="row")
    term.check_shapes((3, 4))
    with pytest.raises(ValueError):
        term.check_shapes((4, 3))
    indef = QuadraticTerm(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(ValueError):
        indef.check_psd()


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(17)
    for _ in range(8):
        m, n = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        prob = _random_problem(rng, m, n, lam=0.7)
        P = rng.random((m, n))
        G = prob.gradient(P)
        G_fd = fd_gradient(prob.objective, P)
        denom = max(1.0, float(np.abs(G_fd).max()))
        assert np.abs(G - G_fd).max() / denom < 1e-5


def test_objective_decomposition_and_curvature():
    rng = np.random.default_rng(5)
    prob = _random_problem(rng, 4, 5, lam=0.3)
    P = rng.random((4, 5))
    D = rng.normal(size=(4, 5))
    # f(P + tD) must be exactly quadratic in t with the reported curvature
    f0 = prob.objective(P)
    slope = float(np.sum(prob.gradient(P) * D))
    curv = prob.curvature(D)
    for t in (0.1, 0.5, 1.3):
        assert prob.objective(P + t * D) == pytest.approx(
            f0 + t * slope + t * t * curv, rel=1e-9)


def test_lam_zero_short_circuits_to_emd():
    rng = np.random.default_rng(11)
    prob = _random_problem(rng, 5, 4, lam=0.0)
    sol = solve_laplacian_ot(prob)
    ref = solve_emd(prob.cost)
    np.testing.assert_array_equal(sol.coupling.matrix, ref.matrix)
    assert sol.iterations == 0 and sol.converged


def test_solver_trace_monotone_and_feasible():
    rng = np.random.default_rng(23)
    for lam in (0.01, 0.5, 5.0):
        prob = _random_problem(rng, 6, 7, lam)
        sol = solve_laplacian_ot(prob)
        assert isinstance(sol, RegularizedSolution)
        tr = np.array(sol.objective_trace)
        assert np.all(np.diff(tr) <= 1e-9 * np.maximum(1.0, np.abs(tr[:-1])))
        np.testing.assert_allclose(sol.coupling.matrix.sum(axis=1), 1 / 6, atol=1e-7)
        np.testing.assert_allclose(sol.coupling.matrix.sum(axis=0), 1 / 7, atol=1e-7)
        assert sol.coupling.matrix.min() >= 0


def test_solver_beats_feasible_competitors():
    # the returned plan should have the lowest full objective among the
    # EMD plan and a bag of random feasible couplings
    rng = np.random.default_rng(31)
    prob = _random_problem(rng, 5, 5, lam=1.0)
    a = np.full(5, 0.2)
    sol = solve_laplacian_ot(prob)
    best = prob.objective(sol.coupling.matrix)
    assert best <= prob.objective(solve_emd(prob.cost).matrix) + 1e-9
    for _ in range(20):
        P = random_feasible_coupling(rng, a, a)
        assert best <= prob.objective(P) + 1e-7


def test_penalty_value_shrinks_as_lam_grows():
    rng = np.random.default_rng(41)
    M = CostMatrix(rng.random((6, 6)))
    W = rng.random((6, 6)); W = (W + W.T) / 2; np.fill_diagonal(W, 0)
    B = rng.normal(size=(6, 7))
    term = QuadraticTerm(laplacian(W), B @ B.T, weight=1.0, side="row")
    values = []
    for lam in (0.01, 0.1, 1.0, 10.0):
        sol = solve_laplacian_ot(RegularizedProblem(M, [term], lam))
        values.append(term.value(sol.coupling.matrix))
    for hi, lo in zip(values, values[1:]):
        assert lo <= hi + 1e-6 * max(1.0, abs(hi))


def test_solver_rejects_bad_terms():
    M = CostMatrix(np.ones((3, 3)))
    wrong_shape = QuadraticTerm(np.eye(4), np.eye(3), side="row")
    with pytest.raises(ValueError):
        solve_laplacian_ot(RegularizedProblem(M, [wrong_shape], 0.5))
    indef = QuadraticTerm(np.diag([1.0, -1.0, 0.0]), np.eye(3), side="row")
    prob = RegularizedProblem(M, [indef], 0.5)
    with pytest.raises(ValueError):
        solve_laplacian_ot(prob)
    with pytest.raises(ValueError):
        solve_laplacian_ot(RegularizedProblem(M, [], 0.5), tol=-1.0)
    with pytest.raises(ValueError):
        solve_laplacian_ot(RegularizedProblem(M, [], 0.5), max_iters=0)


def test_small_closed_form_instance():
    # one source point, two sinks: the plan is forced by the marginals, so
    # the solver must return it for every lam
    M = CostMatrix(np.array([[1.0, 3.0]]))
    term = QuadraticTerm(np.zeros((2, 2)), np.eye(1), side="col")
    for lam in (0.0, 1.0, 10.0):
        sol = solve_laplacian_ot(RegularizedProblem(M, [term], lam),
                                 source=np.array([1.0]),
                                 target=np.array([0.25, 0.75]))
        np.testing.assert_allclose(sol.coupling.matrix, [[0.25, 0.75]], atol=1e-12)
