import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saddlepc.dense import lu_solve
from saddlepc.gmres import NumericalFailure, arnoldi_mgs_step, gmres_right
from saddlepc.preconditioners import build_P
from saddlepc.problems import Ex2Params, gen_example1, gen_example2, random_saddle
from saddlepc.saddle import build_S


def test_identity_operator():
    b = np.arange(1.0, 6.0)
    rep = gmres_right(lambda v: v, None, b)
    assert rep.converged and rep.iterations == 1
    assert np.allclose(rep.x, b, rtol=1e-14)


def test_exact_preconditioner_one_step(rng):
    a = rng.standard_normal((30, 30)) + 5 * np.eye(30)
    b = rng.standard_normal(30)
    rep = gmres_right(a, lambda v: lu_solve(a, v), b)
    assert rep.converged and rep.iterations == 1


def test_zero_rhs():
    rep = gmres_right(np.eye(3), None, np.zeros(3))
    assert rep.converged and rep.iterations == 0
    assert np.array_equal(rep.x, np.zeros(3))


def test_arnoldi_examples(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((8, 3)))
    V = Q.T
    w = rng.standard_normal(8)
    w -= V.T @ (V @ w)
    h, norm, _ = arnoldi_mgs_step(V, w)
    assert np.abs(h).max() <= 1e-14 * np.linalg.norm(w)
    assert norm == pytest.approx(np.linalg.norm(w), rel=1e-14)
    h, norm, _ = arnoldi_mgs_step(V, V[1])
    assert np.allclose(h, [0, 1, 0], atol=1e-14)
    assert norm <= 1e-14
    x = rng.standard_normal(8)
    h, norm, vec = arnoldi_mgs_step(V, x)
    assert np.linalg.norm(V.T @ h + vec - x) <= 1e-12 * np.linalg.norm(x)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        gmres_right(np.eye(2), None, np.ones(2), tol=0)
    with pytest.raises(ValueError):
        gmres_right(np.eye(2), None, np.ones(2), maxit=0)


def test_nan_raises():
    with pytest.raises(NumericalFailure):
        gmres_right(lambda v: v * np.nan, None, np.ones(3))


@given(st.integers(2, 200), st.integers(0, 2**32 - 1))
def test_matches_lu_solve(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) / np.sqrt(n) + 3 * np.eye(n)
    b = rng.standard_normal(n)
    rep = gmres_right(a, None, b, tol=1e-12)
    x = lu_solve(a, b)
    assert np.linalg.norm(rep.x - x) <= 1e-8 * np.linalg.norm(x)


def test_report_invariants(rng):
    n = 120
    a = rng.standard_normal((n, n)) / np.sqrt(n) + 1.5 * np.eye(n)
    b = rng.standard_normal(n)
    rep = gmres_right(a, None, b, tol=1e-10)
    h = np.array(rep.relres_history)
    assert h[0] == 1.0
    assert np.all(np.diff(h) <= 1e-15)
    assert abs(h[-1] - rep.true_final_relres) <= 1e-6
    assert rep.basis_orthogonality <= 1e-10
    assert rep.wall_seconds >= 0


def test_maxit_reached_not_converged(rng):
    a = rng.standard_normal((50, 50))
    rep = gmres_right(a, None, rng.standard_normal(50), tol=1e-14, maxit=5)
    assert not rep.converged and rep.iterations == 5


def test_happy_breakdown():
    # b lies in a 2-dimensional invariant subspace
    a = np.diag([1.0, 2.0, 3.0, 4.0])
    b = np.array([1.0, 1.0, 0.0, 0.0])
    rep = gmres_right(a, None, b, tol=1e-15)
    assert rep.converged and rep.iterations == 2
    assert np.allclose(rep.x, [1, 0.5, 0, 0])


@pytest.mark.parametrize("sys", [gen_example1(2), gen_example1(6), gen_example2(2),
                                 gen_example2(4), gen_example2(Ex2Params(3, "sparse-random")),
                                 random_saddle(30, 20, 10, 1)],
                         ids=["ex1p2", "ex1p6", "ex2p2", "ex2p4", "ex2rand", "random"])
def test_two_step_convergence_with_exact_schur(sys):
    S, sS = build_S(sys, "exact")
    rep = gmres_right(sys.matvec, build_P(sys, S, sS), sys.b)
    assert rep.converged and rep.iterations <= 2
    assert rep.true_final_relres < 1e-7
