"""Block preconditioners for the skew saddle point form.

``P`` is the splitting preconditioner

    [A  B^T   0  ]
    [0   S   -C^T]
    [0   C    0  ]

with remainder ``R = P - (skew operator)``, which is zero except for the
middle block row ``[B  S  0]``.  ``PD`` and ``P1`` are the block-diagonal
and block-triangular baselines, both using ``C S^{-1} C^T`` as the third
diagonal block.
"""
from __future__ import annotations

import numpy as np

from .dense import NotPositiveDefiniteError
from .saddle import BlockSaddle
from .solvers import DiagonalSolver, SpdSolver, matvec, spd_solver, to_dense
from .sparse import SparseMat, block3x3, matmul, spmv, spmv_t, transpose

__all__ = [
    "PrecondP",
    "PrecondPD",
    "PrecondP1",
    "schur_of_C",
    "build_P",
    "build_PD",
    "build_P1",
    "build_preconditioner",
    "apply_P_inv",
    "apply_PD_inv",
    "apply_P1_inv",
    "apply_R",
]


def schur_of_C(C: SparseMat, S, solver_S: SpdSolver):
    """Form ``C S^{-1} C^T`` and factor it.

    Diagonal ``S`` keeps the product sparse; any other ``S`` goes through
    dense solves with the columns of ``C^T``.
    """
    if isinstance(solver_S, DiagonalSolver):
        Ct = transpose(C)
        M = matmul(C.scale_columns(1.0 / solver_S.d), Ct)
        M = 0.5 * (M + transpose(M))
    else:
        X = solver_S.solve(C.T.toarray())
        M = C @ X
        M = 0.5 * (M + M.T)
    try:
        return M, spd_solver(M)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            getattr(exc, "pivot", -1), None,
            "C S^-1 C^T (C not full row rank or S invalid)") from exc


class _BlockPrecond:
    label = ""

    def __init__(self, sys: BlockSaddle, S, solver_S: SpdSolver = None, solver_A: SpdSolver = None):
        self.sys = sys
        self.S = S
        self.solver_S = spd_solver(S) if solver_S is None else solver_S
        self.solver_A = sys.solver_A if solver_A is None else solver_A
        self.CSCt, self.solver_CSCt = schur_of_C(sys.C, S, self.solver_S)
        self.n, self.m, self.l = sys.dims

    @property
    def size(self):
        return self.n + self.m + self.l

    def _split(self, w):
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.size,):
            raise ValueError(f"vector has length {w.shape}, preconditioner size is {self.size}")
        n, m = self.n, self.m
        return w[:n], w[n:n + m], w[n + m:]

    def __call__(self, w):
        return self.apply_inv(w)

    def toarray(self):
        return self.assemble().toarray()

    def _blocks(self):
        S = self.S if isinstance(self.S, SparseMat) else SparseMat.from_dense(to_dense(self.S))
        CSCt = self.CSCt if isinstance(self.CSCt, SparseMat) else SparseMat.from_dense(self.CSCt)
        return self.sys.A_sparse(), self.sys.B, self.sys.C, S, CSCt

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, m={self.m}, l={self.l})"


class PrecondP(_BlockPrecond):
    label = "P"

    def apply_inv(self, w):
        w1, w2, w3 = self._split(w)
        C = self.sys.C
        t1 = w3 - spmv(C, self.solver_S.solve(w2))
        v3 = self.solver_CSCt.solve(t1)
        t2 = w2 + spmv_t(C, v3)
        v2 = self.solver_S.solve(t2)
        t3 = w1 - spmv_t(self.sys.B, v2)
        v1 = self.solver_A.solve(t3)
        return np.concatenate([v1, v2, v3])

    def matvec(self, v):
        x, y, z = self._split(v)
        B, C = self.sys.B, self.sys.C
        return np.concatenate([
            matvec(self.sys.A, x) + spmv_t(B, y),
            matvec(self.S, y) - spmv_t(C, z),
            spmv(C, y),
        ])

    def assemble(self) -> SparseMat:
        A, B, C, S, _ = self._blocks()
        d = (self.n, self.m, self.l)
        return block3x3([[A, B.T, None], [None, S, -C.T], [None, C, None]], d, d)


class PrecondPD(_BlockPrecond):
    label = "PD"

    def apply_inv(self, w):
        w1, w2, w3 = self._split(w)
        return np.concatenate([self.solver_A.solve(w1),
                               self.solver_S.solve(w2),
                               self.solver_CSCt.solve(w3)])

    def matvec(self, v):
        x, y, z = self._split(v)
        return np.concatenate([matvec(self.sys.A, x), matvec(self.S, y), matvec(self.CSCt, z)])

    def assemble(self) -> SparseMat:
        A, _, _, S, CSCt = self._blocks()
        d = (self.n, self.m, self.l)
        return block3x3([[A, None, None], [None, S, None], [None, None, CSCt]], d, d)


class PrecondP1(_BlockPrecond):
    """Block-triangular baseline.

    In the symmetric form its middle block row is ``[B  -S  C^T]``.  The
    ``skew`` form (default) negates that row so it matches the skew
    operator the solvers see; with right preconditioning this gives the
    same Krylov iterates as the symmetric pairing.
    """

    label = "P1"

    def __init__(self, sys, S, solver_S=None, solver_A=None, form="skew"):
        if form not in ("skew", "symmetric"):
            raise ValueError("form must be 'skew' or 'symmetric'")
        self.form = form
        super().__init__(sys, S, solver_S, solver_A)

    def apply_inv(self, w):
        w1, w2, w3 = self._split(w)
        v1 = self.solver_A.solve(w1)
        v3 = self.solver_CSCt.solve(w3)
        r = spmv(self.sys.B, v1) + spmv_t(self.sys.C, v3)
        v2 = self.solver_S.solve(r + w2 if self.form == "skew" else r - w2)
        return np.concatenate([v1, v2, v3])

    def matvec(self, v):
        x, y, z = self._split(v)
        mid = spmv(self.sys.B, x) - matvec(self.S, y) + spmv_t(self.sys.C, z)
        if self.form == "skew":
            mid = -mid
        return np.concatenate([matvec(self.sys.A, x), mid, matvec(self.CSCt, z)])

    def assemble(self) -> SparseMat:
        A, B, C, S, CSCt = self._blocks()
        d = (self.n, self.m, self.l)
        sgn = -1.0 if self.form == "skew" else 1.0
        return block3x3([[A, None, None], [sgn * B, -sgn * S, sgn * C.T], [None, None, CSCt]], d, d)


PRECONDITIONERS = {"P": PrecondP, "PD": PrecondPD, "P1": PrecondP1}


def build_P(sys, S, solver_S=None, solver_A=None) -> PrecondP:
    return PrecondP(sys, S, solver_S, solver_A)


def build_PD(sys, S, solver_S=None, solver_A=None) -> PrecondPD:
    return PrecondPD(sys, S, solver_S, solver_A)


def build_P1(sys, S, solver_S=None, solver_A=None, form="skew") -> PrecondP1:
    return PrecondP1(sys, S, solver_S, solver_A, form=form)


def build_preconditioner(label, sys, S, solver_S=None, solver_A=None):
    """Build ``"P"``, ``"PD"`` or ``"P1"``; ``"none"`` returns ``None``."""
    if label in (None, "none", "I"):
        return None
    try:
        cls = PRECONDITIONERS[label]
    except KeyError:
        raise ValueError(f"unknown preconditioner {label!r}") from None
    return cls(sys, S, solver_S, solver_A)


def apply_P_inv(p: PrecondP, w):
    return p.apply_inv(w)


def apply_PD_inv(p: PrecondPD, w):
    return p.apply_inv(w)


def apply_P1_inv(p: PrecondP1, w):
    return p.apply_inv(w)


def apply_R(sys: BlockSaddle, S, x):
    """Splitting remainder: ``(0; B x1 + S x2; 0)``."""
    x1, x2, _ = sys.split(x)
    return np.concatenate([np.zeros(sys.n), spmv(sys.B, x1) + matvec(S, x2), np.zeros(sys.l)])
