import numpy as np
import pytest

from mclab.errors import DimensionError, InfeasibleError, PreconditionError
from mclab.graphon import gen_half_rows
from mclab.matcore import avg_frobenius, nuclear_norm
from mclab.models import SolverConfig
from mclab.nucmin import complete_modified_cr, complete_plain_cr, project_feasible, svt


def corner_oracle(lo, hi, step=1e-4):
    """Grid search for the (0, 0) entry of the all-ones 4 x 4 matrix minimizing the nuclear norm."""
    best_t, best_val = None, np.inf
    for t in np.arange(lo, hi + step / 2, step):
        M = np.ones((4, 4))
        M[0, 0] = t
        val = np.linalg.svd(M, compute_uv=False).sum()
        if val < best_val - 1e-15:
            best_t, best_val = t, val
    return best_t


# --- proximal and projection steps ---
def test_svt_examples(rng):
    A = rng.standard_normal((5, 4))
    np.testing.assert_allclose(svt(A, 0.0), A, atol=1e-12)
    np.testing.assert_allclose(svt(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]), atol=1e-14)
    sigma_1 = np.linalg.svd(A, compute_uv=False)[0]
    np.testing.assert_array_equal(svt(A, sigma_1 + 1e-9), np.zeros((5, 4)))


def test_svt_rejects_negative_threshold():
    with pytest.raises(PreconditionError):
        svt(np.eye(2), -1.0)


def test_project_feasible_examples():
    P = np.array([[1.0, 0.0], [0.0, 0.0]])
    revealed = np.array([[0.3, 0.0], [0.0, 0.0]])
    B = np.array([[0.3, 0.2], [-0.7, 0.9]])
    np.testing.assert_array_equal(project_feasible(B, revealed, P, 1.0), B)
    clamped = project_feasible([[5.0, 2.5], [0.0, -3.0]], revealed, P, 1.0)
    np.testing.assert_array_equal(clamped, [[0.3, 1.0], [0.0, -1.0]])


def test_svt_minimizes_the_proximal_objective(rng):
    A = rng.standard_normal((6, 5))
    t = 0.8

    def objective(B):
        return 0.5 * np.linalg.norm(B - A) ** 2 + t * np.linalg.norm(B, "nuc")

    best = objective(svt(A, t))
    for _ in range(200):
        step = rng.uniform(1e-4, 1.0)
        assert objective(svt(A, t) + step * rng.standard_normal(A.shape)) >= best - 1e-10


def test_project_feasible_is_idempotent_and_non_expansive(rng):
    L = 1.0
    for _ in range(50):
        P = (rng.uniform(size=(6, 7)) < 0.4).astype(float)
        revealed = rng.uniform(-L, L, size=(6, 7)) * P
        B, C = rng.normal(scale=2.0, size=(2, 6, 7))
        projected = project_feasible(B, revealed, P, L)
        np.testing.assert_array_equal(project_feasible(projected, revealed, P, L), projected)
        np.testing.assert_array_equal(projected * P, revealed)
        assert np.abs(projected).max() <= L
        gap = np.linalg.norm(projected - project_feasible(C, revealed, P, L))
        assert gap <= np.linalg.norm(B - C) + 1e-12


def test_project_feasible_detects_infeasibility():
    with pytest.raises(InfeasibleError):
        project_feasible(np.zeros((1, 2)), [[2.0, 0.0]], [[1.0, 0.0]], 1.0)
    with pytest.raises(DimensionError):
        project_feasible(np.zeros((2, 2)), np.zeros((2, 3)), np.ones((2, 3)), 1.0)


# --- solvers ---
def test_full_reveal_returns_revealed(rng):
    A = rng.uniform(-1.0, 1.0, size=(12, 9))
    P = np.ones_like(A)
    for result in (complete_modified_cr(A, P, 1.0), complete_plain_cr(A, P)):
        assert avg_frobenius(result.estimate - A) <= 1e-6
        assert result.feasibility_gap <= result.primal_residual + 1e-12


def test_corner_missing_ones_modified():
    P = np.ones((4, 4))
    P[0, 0] = 0.0
    result = complete_modified_cr(P.copy(), P, 1.0)
    assert abs(result.estimate[0, 0] - corner_oracle(-1.0, 1.0)) <= 1e-3


def test_corner_missing_ones_plain():
    P = np.ones((4, 4))
    P[0, 0] = 0.0
    result = complete_plain_cr(P.copy(), P)
    assert abs(result.estimate[0, 0] - corner_oracle(-3.0, 3.0)) <= 1e-3
    assert result.nuclear_norm == pytest.approx(4.0, abs=1e-3)


def test_zero_truth_on_half_rows_gives_zero():
    P = gen_half_rows(8)
    result = complete_modified_cr(np.zeros((8, 8)), P, 1.0)
    assert result.converged
    np.testing.assert_array_equal(result.estimate, np.zeros((8, 8)))
    assert result.nuclear_norm == 0.0


def test_plain_with_zero_revealed_entries():
    P = gen_half_rows(6)
    result = complete_plain_cr(np.zeros((6, 6)), P)
    assert avg_frobenius(result.estimate) <= 1e-9


def test_revealed_entries_are_kept(rng):
    U = rng.choice([-1.0, 1.0], size=(10, 2))
    V = rng.choice([-1.0, 1.0], size=(10, 2))
    A = U @ V.T / 2.0
    P = (rng.uniform(size=A.shape) < 0.6).astype(float)
    result = complete_modified_cr(A * P, P, 1.0)
    np.testing.assert_array_equal(result.estimate[P == 1.0], A[P == 1.0])
    assert np.max(np.abs(result.estimate)) <= 1.0
    if result.converged:
        assert result.nuclear_norm <= nuclear_norm(A) + 1e-4 * 10


def test_non_convergence_is_reported_not_raised():
    P = np.ones((4, 4))
    P[0, 0] = 0.0
    result = complete_modified_cr(P.copy(), P, 1.0, SolverConfig(max_iters=1))
    assert result.iterations == 1
    assert not result.converged
    assert len(result.history) == 1


def test_solver_preconditions():
    with pytest.raises(InfeasibleError):
        complete_modified_cr([[2.0, 0.0]], [[1.0, 0.0]], 1.0)
    with pytest.raises(PreconditionError):
        complete_plain_cr(np.ones((2, 2)), np.zeros((2, 2)))
    with pytest.raises(PreconditionError):
        complete_modified_cr(np.ones((2, 2)), np.ones((2, 2)), 0.0)
