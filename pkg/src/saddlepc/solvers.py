"""Factored symmetric positive definite solve handles.

A handle is built once and then applied many times inside Krylov and
stationary iterations.  Every handle also knows how to multiply by the
matrix it inverts, which is what the round-trip tests use.
"""
from __future__ import annotations

import numpy as np

from .cholesky import sparse_cholesky
from .dense import NotPositiveDefiniteError, check_symmetric, chol, chol_solve
from .sparse import SparseMat, spmv

__all__ = [
    "DiagonalPlusRankOne",
    "SpdSolver",
    "DiagonalSolver",
    "DenseCholeskySolver",
    "SparseCholeskySolver",
    "RankOneCorrectedSolver",
    "spd_solver",
    "matvec",
    "to_dense",
    "lambda_min",
]


class DiagonalPlusRankOne:
    """The symmetric matrix ``diag(d) + c * u u^T`` kept in factored form."""

    def __init__(self, d, u, c):
        self.d = np.asarray(d, dtype=np.float64).copy()
        self.u = np.asarray(u, dtype=np.float64).copy()
        self.c = float(c)
        if self.d.shape != self.u.shape or self.d.ndim != 1:
            raise ValueError("d and u must be vectors of equal length")

    @property
    def shape(self):
        n = len(self.d)
        return (n, n)

    @property
    def nrows(self):
        return len(self.d)

    ncols = nrows

    def __matmul__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 2:
            return self.d[:, None] * x + self.c * np.outer(self.u, self.u @ x)
        return self.d * x + self.c * (self.u @ x) * self.u

    def diagonal(self):
        return self.d + self.c * self.u**2

    def toarray(self):
        return np.diag(self.d) + self.c * np.outer(self.u, self.u)

    def to_sparse(self) -> SparseMat:
        return SparseMat.from_dense(self.toarray())

    def __repr__(self):
        return f"DiagonalPlusRankOne(n={len(self.d)}, c={self.c:.6g})"


def matvec(a, x):
    """Multiply a ``SparseMat``, dense array or ``DiagonalPlusRankOne`` by ``x``."""
    if isinstance(a, SparseMat):
        return spmv(a, x)
    return a @ np.asarray(x, dtype=np.float64)


def to_dense(a):
    if isinstance(a, np.ndarray):
        return a
    return a.toarray()


class SpdSolver:
    kind = "abstract"
    n = 0

    def solve(self, b):
        raise NotImplementedError

    def matvec(self, x):
        raise NotImplementedError

    def __call__(self, b):
        return self.solve(b)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


class DiagonalSolver(SpdSolver):
    kind = "DiagonalInverse"

    def __init__(self, d):
        d = np.asarray(d, dtype=np.float64)
        bad = np.flatnonzero(~(d > 0))
        if len(bad):
            raise NotPositiveDefiniteError(int(bad[0]), float(d[bad[0]]))
        self.d = d
        self.n = len(d)

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64)
        return b / self.d if b.ndim == 1 else b / self.d[:, None]

    def matvec(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.d * x if x.ndim == 1 else self.d[:, None] * x


class DenseCholeskySolver(SpdSolver):
    kind = "DenseCholesky"

    def __init__(self, a):
        self.a = check_symmetric(a)
        self.L = chol(self.a)
        self.n = self.a.shape[0]

    def solve(self, b):
        return chol_solve(self.L, b)

    def matvec(self, x):
        return self.a @ np.asarray(x, dtype=np.float64)


class SparseCholeskySolver(SpdSolver):
    kind = "SparseCholesky"

    def __init__(self, a: SparseMat):
        if a.symmetry_defect() > 1e-12:
            raise ValueError("matrix is not symmetric to 1e-12 relative")
        self.a = a
        self.factor = sparse_cholesky(a)
        self.n = a.nrows

    def solve(self, b):
        return self.factor.solve(b)

    def matvec(self, x):
        return self.a @ np.asarray(x, dtype=np.float64)


class RankOneCorrectedSolver(SpdSolver):
    """Sherman-Morrison solve with ``diag(d) + c u u^T``."""

    kind = "RankOneCorrected"

    def __init__(self, op: DiagonalPlusRankOne):
        self.op = op
        self.base = DiagonalSolver(op.d)
        self.w = self.base.solve(op.u)
        self.denom = 1.0 + op.c * (op.u @ self.w)
        if not self.denom > 0:
            raise NotPositiveDefiniteError(0, self.denom, "rank-one corrected matrix")
        self.n = op.nrows

    def solve(self, b):
        y = self.base.solve(b)
        coef = (self.op.c / self.denom) * (self.op.u @ y)
        if y.ndim == 1:
            return y - coef * self.w
        return y - np.outer(self.w, coef)

    def matvec(self, x):
        return self.op @ x


def spd_solver(a) -> SpdSolver:
    """Pick the solver that matches the structure of ``a``."""
    if isinstance(a, DiagonalPlusRankOne):
        return RankOneCorrectedSolver(a)
    if isinstance(a, SparseMat):
        if a.nrows != a.ncols:
            raise ValueError("SPD solver needs a square matrix")
        if a.is_diagonal():
            return DiagonalSolver(a.diagonal())
        return SparseCholeskySolver(a)
    return DenseCholeskySolver(np.asarray(a, dtype=np.float64))


def lambda_min(solver: SpdSolver, tol=1e-8, maxit=5000):
    """Smallest eigenvalue by inverse power iteration with a factored solver.

    Stops once the eigen-residual ``||A x - rho x||`` drops below
    ``tol * rho``; an eigenvalue-change test alone stalls when the smallest
    eigenvalues are clustered.  Returns the Rayleigh quotient.
    """
    if isinstance(solver, DiagonalSolver):
        return float(solver.d.min())
    n = solver.n
    x = np.ones(n) / np.sqrt(n)
    rho = float(x @ solver.matvec(x))
    for _ in range(maxit):
        y = solver.solve(x)
        x = y / np.linalg.norm(y)
        ax = solver.matvec(x)
        rho = float(x @ ax)
        if np.linalg.norm(ax - rho * x) <= tol * abs(rho):
            break
    return rho
