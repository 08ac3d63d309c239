import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from saddlepc.dense import (ConvergenceError, NotPositiveDefiniteError, SingularMatrixError,
                            chol, chol_solve, householder_qr, lu_solve, nullspace_basis,
                            qr_eigen, sym_eigen)
from saddlepc.problems import gen_example1
from saddlepc.sparse import SparseMat, identity


def spd(rng, n):
    g = rng.standard_normal((n, n))
    return g @ g.T / n + np.eye(n)


def match_multisets(a, b):
    """Greedy nearest matching; returns the largest distance."""
    b = list(b)
    worst = 0.0
    for x in a:
        k = int(np.argmin([abs(x - y) for y in b]))
        worst = max(worst, abs(x - b.pop(k)))
    return worst


# --- Cholesky -----------------------------------------------------------------

def test_chol_examples():
    assert_array_equal(chol(np.eye(3)), np.eye(3))
    assert_allclose(chol(np.array([[4.0, 2.0], [2.0, 3.0]])), [[2, 0], [1, np.sqrt(2)]], rtol=1e-15)


def test_chol_not_positive_definite_reports_pivot():
    with pytest.raises(NotPositiveDefiniteError) as info:
        chol(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert info.value.pivot == 1


def test_chol_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        chol(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_chol_solve_examples():
    b = np.array([4.0, 5.0])
    assert_array_equal(chol_solve(np.eye(2), b), b)
    L = np.array([[2.0, 0.0], [1.0, np.sqrt(2.0)]])
    assert_allclose(chol_solve(L, b), [0.25, 1.5], rtol=1e-14)
    assert_array_equal(chol_solve(L, np.zeros(2)), np.zeros(2))
    with pytest.raises(SingularMatrixError):
        chol_solve(np.array([[1.0, 0.0], [1.0, 0.0]]), b)


@pytest.mark.parametrize("n", [1, 10, 100, 300])
def test_chol_matches_lu(n):
    rng = np.random.default_rng(n)
    a = spd(rng, n)
    L = chol(a)
    assert np.linalg.norm(L @ L.T - a) <= 1e-10 * np.linalg.norm(a)
    b = rng.standard_normal(n)
    x1, x2 = chol_solve(L, b), lu_solve(a, b)
    assert np.linalg.norm(x1 - x2) <= 1e-9 * np.linalg.norm(x2)


# --- LU -----------------------------------------------------------------------

def test_lu_examples(rng):
    b = rng.standard_normal(4)
    assert_allclose(lu_solve(np.eye(4), b), b, rtol=1e-15)
    assert_array_equal(lu_solve(np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([3.0, 7.0])), [7, 3])
    a = rng.standard_normal((10, 10)) + 10 * np.eye(10)
    x = lu_solve(a, b := rng.standard_normal(10))
    assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_lu_singular():
    with pytest.raises(SingularMatrixError, match="pivot column 1"):
        lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))


def test_lu_extended_precision(rng):
    a = rng.standard_normal((8, 8)) + 4 * np.eye(8)
    b = rng.standard_normal(8)
    x = lu_solve(a, b, dtype=np.longdouble)
    assert x.dtype == np.longdouble
    assert np.linalg.norm(a.astype(np.longdouble) @ x - b) <= 1e-17 * np.linalg.norm(b)


# --- symmetric eigenvalues ----------------------------------------------------

def test_sym_eigen_examples():
    assert_allclose(sym_eigen(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    assert_allclose(sym_eigen(np.array([[0.0, 1.0], [1.0, 0.0]])), [-1, 1], atol=1e-15)
    assert_allclose(sym_eigen(np.eye(5)), np.ones(5))
    with pytest.raises(ValueError):
        sym_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_sym_eigen_vectors(rng):
    a = spd(rng, 12)
    w, V = sym_eigen(a, vectors=True)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(V.T @ V - np.eye(12)) <= 1e-12
    assert np.linalg.norm(a @ V - V * w) <= 1e-11 * np.linalg.norm(a)


# --- QR -----------------------------------------------------------------------

def test_householder_qr_examples(rng):
    Q, R = householder_qr(np.eye(3))
    assert_allclose(np.abs(Q), np.eye(3), atol=1e-15)
    assert_allclose(np.abs(R), np.eye(3), atol=1e-15)
    _, R = householder_qr(np.array([[3.0], [4.0]]))
    assert abs(R[0, 0]) == pytest.approx(5.0, rel=1e-15)
    a = rng.standard_normal((6, 3))
    Q, R = householder_qr(a, full=False)
    assert np.linalg.norm(Q.T @ Q - np.eye(3)) <= 1e-12
    assert np.linalg.norm(Q @ R - a) <= 1e-10 * np.linalg.norm(a)
    assert np.allclose(np.tril(R, -1), 0)
    Qf, Rf = householder_qr(a)
    assert Qf.shape == (6, 6) and Rf.shape == (6, 3)
    assert np.linalg.norm(Qf @ Rf - a) <= 1e-10 * np.linalg.norm(a)


def test_nullspace_examples():
    Y = nullspace_basis(SparseMat.from_dense([[1.0, 0.0]]))
    assert Y.shape == (2, 1)
    assert_allclose(np.abs(Y[:, 0]), [0, 1], atol=1e-15)
    assert nullspace_basis(identity(4)).shape == (4, 0)
    assert nullspace_basis(gen_example1(2).C).shape == (4, 0)


def test_nullspace_rank_deficient():
    with pytest.raises(np.linalg.LinAlgError):
        nullspace_basis(np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0]]))


@given(st.integers(1, 5), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_nullspace_property(l, extra, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((l, l + extra))
    Y = nullspace_basis(c)
    assert Y.shape == (l + extra, extra)
    assert np.all(np.linalg.norm(c @ Y, axis=0) <= 1e-10 * np.linalg.norm(c))
    assert np.linalg.norm(Y.T @ Y - np.eye(extra)) <= 1e-12


# --- nonsymmetric eigenvalues -------------------------------------------------

@pytest.mark.parametrize("precision", ["double", "extended"])
def test_qr_eigen_examples(rng, precision):
    t = np.triu(rng.standard_normal((6, 6)))
    assert match_multisets(qr_eigen(t, precision=precision), np.diag(t)) <= 1e-12
    ev = qr_eigen(np.array([[0.0, -1.0], [1.0, 0.0]]), precision=precision)
    assert match_multisets(ev, [1j, -1j]) <= 1e-15
    s = spd(rng, 15)
    assert match_multisets(qr_eigen(s, precision=precision), sym_eigen(s)) <= 1e-8


def test_qr_eigen_conjugate_pairs(rng):
    a = rng.standard_normal((40, 40))
    ev = qr_eigen(a)
    cx = ev[ev.imag != 0]
    assert cx.size % 2 == 0
    for lam in cx:
        assert np.min(np.abs(cx - np.conj(lam))) == 0.0


@given(st.integers(2, 25), st.integers(0, 2**32 - 1))
def test_qr_eigen_similarity_and_trace(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    perm = rng.permutation(n)
    b = a[np.ix_(perm, perm)]
    ea, eb = qr_eigen(a), qr_eigen(b)
    assert match_multisets(ea, eb) <= 1e-8 * max(1.0, np.abs(ea).max())
    assert abs(ea.sum() - np.trace(a)) <= 1e-8 * np.linalg.norm(a)


def test_qr_eigen_jordan_block_extended():
    # the defective eigenvalue scatters by ~eps^(1/k); long double keeps it tight
    J = np.eye(3) + np.diag([1.0, 1.0], 1)
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((3, 3)))
    a = Q @ J @ Q.T
    assert np.abs(qr_eigen(a, precision="extended") - 1).max() <= 1e-5


def test_qr_eigen_errors():
    with pytest.raises(ValueError):
        qr_eigen(np.ones((2, 3)))
    with pytest.raises(ValueError):
        qr_eigen(np.eye(5), cap=4)
    with pytest.raises(ValueError):
        qr_eigen(np.array([[np.nan]]))


def test_qr_eigen_convergence_error_names_block():
    # one sweep per eigenvalue is far too few for a random matrix
    a = np.random.default_rng(3).standard_normal((30, 30))
    with pytest.raises(ConvergenceError, match="row"):
        qr_eigen(a, maxit=1, exceptional_every=1000)
