"""Three-by-three block saddle point systems.

The system holds ``A`` (n x n, SPD), ``B`` (m x n) and ``C`` (l x m) and
the right-hand side of the symmetric form::

    [A  B^T  0 ] [x]   [f]
    [B  0    C^T] [y] = [g]
    [0  C    0 ] [z]   [h]

Solvers work on the equivalent skew form obtained by negating the middle
block row::

    [ A   B^T   0  ]
    [-B   0    -C^T]  (x; y; z) = (f; -g; h) = b
    [ 0   C     0  ]
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .dense import check_symmetric, sym_eigen
from .solvers import (DiagonalPlusRankOne, SpdSolver, lambda_min, matvec,
                      spd_solver, to_dense)
from .sparse import SparseMat, block3x3, diag, identity, matrix_2norm, spmv, spmv_t

__all__ = [
    "BlockSaddle",
    "SChoice",
    "assemble_skew",
    "assemble_sym",
    "rhs_all_ones",
    "rel_residual",
    "err_metric",
    "build_S",
    "exact_schur",
    "check_theorem_condition",
    "check_norm_condition",
]

SCHUR_CAP = 4000


@dataclass(frozen=True, eq=False)
class BlockSaddle:
    """``A``, ``B``, ``C`` and the right-hand side blocks ``f``, ``g``, ``h``.

    ``A`` is a :class:`SparseMat` or, for problems whose leading block is a
    dense rank-one update of a diagonal, a :class:`DiagonalPlusRankOne`.
    """

    A: Union[SparseMat, DiagonalPlusRankOne]
    B: SparseMat
    C: SparseMat
    f: np.ndarray = None
    g: np.ndarray = None
    h: np.ndarray = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n, m, l = self.A.nrows, self.B.nrows, self.C.nrows
        if self.A.shape != (n, n):
            raise ValueError(f"A must be square, got {self.A.shape}")
        if self.B.ncols != n:
            raise ValueError(f"B has {self.B.ncols} columns but A is {n}x{n}")
        if self.C.ncols != m:
            raise ValueError(f"C has {self.C.ncols} columns but B has {m} rows")
        if isinstance(self.A, SparseMat) and self.A.symmetry_defect() > 1e-12:
            raise ValueError("A is not symmetric to 1e-12 relative")
        for name, size in (("f", n), ("g", m), ("h", l)):
            v = getattr(self, name)
            v = np.zeros(size) if v is None else np.asarray(v, dtype=np.float64).copy()
            if v.shape != (size,):
                raise ValueError(f"{name} must have length {size}, got {v.shape}")
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def n(self):
        return self.A.nrows

    @property
    def m(self):
        return self.B.nrows

    @property
    def l(self):
        return self.C.nrows

    @property
    def dims(self):
        return (self.n, self.m, self.l)

    @property
    def size(self):
        return self.n + self.m + self.l

    @property
    def b(self) -> np.ndarray:
        """Right-hand side of the skew form, ``(f; -g; h)``."""
        return np.concatenate([self.f, -self.g, self.h])

    def split(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.size,):
            raise ValueError(f"vector has length {v.shape}, system size is {self.size}")
        n, m = self.n, self.m
        return v[:n], v[n:n + m], v[n + m:]

    def matvec(self, v) -> np.ndarray:
        """Apply the skew operator without assembling it."""
        x, y, z = self.split(v)
        return np.concatenate([
            matvec(self.A, x) + spmv_t(self.B, y),
            -spmv(self.B, x) - spmv_t(self.C, z),
            spmv(self.C, y),
        ])

    def sym_matvec(self, v) -> np.ndarray:
        x, y, z = self.split(v)
        return np.concatenate([
            matvec(self.A, x) + spmv_t(self.B, y),
            spmv(self.B, x) + spmv_t(self.C, z),
            spmv(self.C, y),
        ])

    def with_rhs(self, b) -> "BlockSaddle":
        """Copy of the system whose skew right-hand side is ``b``."""
        f, mg, h = self.split(b)
        return BlockSaddle(self.A, self.B, self.C, f, -mg, h, name=self.name)

    @cached_property
    def solver_A(self) -> SpdSolver:
        return spd_solver(self.A)

    def A_sparse(self) -> SparseMat:
        return self.A if isinstance(self.A, SparseMat) else self.A.to_sparse()


def assemble_skew(sys: BlockSaddle) -> SparseMat:
    B, C = sys.B, sys.C
    return block3x3([[sys.A_sparse(), B.T, None],
                     [-B, None, -C.T],
                     [None, C, None]], sys.dims, sys.dims)


def assemble_sym(sys: BlockSaddle) -> SparseMat:
    B, C = sys.B, sys.C
    return block3x3([[sys.A_sparse(), B.T, None],
                     [B, None, C.T],
                     [None, C, None]], sys.dims, sys.dims)


def rhs_all_ones(sys: BlockSaddle):
    """Right-hand side ``b`` whose exact solution is the all-ones vector.

    Returns the vector and a copy of ``sys`` carrying it as ``(f; -g; h)``.
    """
    b = sys.matvec(np.ones(sys.size))
    return b, sys.with_rhs(b)


def rel_residual(sys: BlockSaddle, x, b=None) -> float:
    b = sys.b if b is None else np.asarray(b, dtype=np.float64)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        raise ValueError("relative residual undefined for b = 0")
    return float(np.linalg.norm(b - sys.matvec(x)) / nb)


def err_metric(x, xstar) -> float:
    """Relative error ``||x - x*|| / ||x*||``."""
    xstar = np.asarray(xstar, dtype=np.float64)
    ns = np.linalg.norm(xstar)
    if ns == 0.0:
        raise ValueError("relative error undefined for a zero reference solution")
    return float(np.linalg.norm(np.asarray(x, dtype=np.float64) - xstar) / ns)


@dataclass(frozen=True)
class SChoice:
    """Strategy for the SPD block ``S``: ``identity``, ``diag``, ``exact`` or ``external``."""

    kind: str = "identity"
    matrix: object = None
    scale: float = 1.0

    KINDS = ("identity", "diag", "exact", "external")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown S strategy {self.kind!r}; expected one of {self.KINDS}")
        if (self.kind == "external") != (self.matrix is not None):
            raise ValueError("an external S needs a matrix, and only an external S takes one")
        if not self.scale > 0:
            raise ValueError("S scale must be positive")

    @classmethod
    def coerce(cls, choice) -> "SChoice":
        if isinstance(choice, SChoice):
            return choice
        if isinstance(choice, str):
            aliases = {"I": "identity", "diagschur": "diag", "schur": "exact"}
            return cls(aliases.get(choice, choice))
        return cls("external", matrix=choice)


def exact_schur(sys: BlockSaddle, cap: int = SCHUR_CAP) -> np.ndarray:
    """Dense ``B A^{-1} B^T``, formed by solving with ``A`` against the columns of ``B^T``."""
    if sys.m > cap:
        raise ValueError(
            f"exact Schur complement of size {sys.m} exceeds the cap {cap}; "
            "use the 'diag' or 'identity' S strategy")
    Bt = sys.B.T.toarray()
    X = sys.solver_A.solve(Bt)
    S = sys.B @ X
    return 0.5 * (S + S.T)


def diag_schur(sys: BlockSaddle) -> np.ndarray:
    """Diagonal of ``B diag(A)^{-1} B^T``: entry i is ``sum_j B[i,j]^2 / A[j,j]``."""
    a = sys.A.diagonal()
    if np.any(a <= 0):
        raise ValueError("A has a nonpositive diagonal entry")
    B = sys.B
    return spmv(SparseMat(B.nrows, B.ncols, B.indptr, B.indices, B.data**2, check=False), 1.0 / a)


def build_S(sys: BlockSaddle, choice="identity", cap: int = SCHUR_CAP):
    """Build ``S`` and its solver.

    Returns
    -------
    S : SparseMat or ndarray
        Sparse diagonal for ``identity``/``diag``, dense for ``exact``.
    solver : SpdSolver
    """
    choice = SChoice.coerce(choice)
    if choice.kind == "identity":
        S = identity(sys.m)
    elif choice.kind == "diag":
        d = diag_schur(sys)
        if np.any(d <= 0):
            i = int(np.flatnonzero(d <= 0)[0])
            raise ValueError(f"diagonal Schur approximation has a nonpositive entry at row {i}")
        S = diag(d)
    elif choice.kind == "exact":
        S = exact_schur(sys, cap)
    else:
        S = choice.matrix
        if S.shape != (sys.m, sys.m):
            raise ValueError(f"external S must be {sys.m}x{sys.m}, got {S.shape}")
    if choice.scale != 1.0:
        S = S * choice.scale
    try:
        solver = spd_solver(S)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"S not SPD: {exc}") from exc
    return S, solver


def check_theorem_condition(sys: BlockSaddle, S, cap: int = SCHUR_CAP):
    """Test ``2 S - B A^{-1} B^T`` for positive definiteness.

    Returns ``(holds, lambda_min)``.
    """
    if sys.m > cap:
        raise ValueError(f"m = {sys.m} exceeds the dense cap {cap}")
    M = 2.0 * to_dense(S) - exact_schur(sys, cap)
    lam = float(sym_eigen(0.5 * (M + M.T))[0])
    return lam > 0.0, lam


def check_norm_condition(sys: BlockSaddle, S, solver_S: SpdSolver = None):
    """The cheaper sufficient test ``||B||^2 < 2 lambda_min(A) lambda_min(S)``.

    Returns ``(holds, lhs, rhs)``.
    """
    nb, _ = matrix_2norm(sys.B)
    lhs = nb * nb
    if solver_S is None:
        solver_S = spd_solver(S)
    rhs = 2.0 * lambda_min(sys.solver_A) * lambda_min(solver_S)
    return lhs < rhs, lhs, rhs
