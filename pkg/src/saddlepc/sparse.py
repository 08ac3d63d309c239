"""Compressed-row sparse matrices and the kernels built on them.

Every matrix in the package (A, B, C, the Kronecker factors and the
assembled block operators) is stored as a :class:`SparseMat`: row
offsets, sorted column indices and values, with no duplicate entries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

__all__ = [
    "SparseMat",
    "Triplets",
    "triplets_to_csr",
    "identity",
    "diag",
    "tridiag",
    "kron",
    "spmv",
    "spmv_t",
    "transpose",
    "block",
    "block3x3",
    "block_diag",
    "hstack",
    "vstack",
    "matmul",
    "matrix_2norm",
]

# Largest dimension a builder may produce; keeps indices in 32-bit range.
INDEX_MAX = 2**31 - 1


class SparseMat:
    """Immutable CSR matrix.

    Parameters
    ----------
    nrows, ncols : int
        Matrix shape.
    indptr : array of int, length ``nrows + 1``
        Row offsets into ``indices``/``data``.
    indices : array of int
        Column index of every stored value, strictly increasing per row.
    data : array of float
        Stored values.
    check : bool
        Validate the CSR invariants (default).  Internal builders that
        already guarantee them pass ``False``.
    """

    __slots__ = ("nrows", "ncols", "indptr", "indices", "data")

    def __init__(self, nrows, ncols, indptr, indices, data, check=True):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        for arr in (self.indptr, self.indices, self.data):
            arr.flags.writeable = False
        if check:
            self._check()

    def _check(self):
        if self.nrows < 0 or self.ncols < 0:
            raise ValueError("negative matrix dimension")
        if self.indptr.shape != (self.nrows + 1,):
            raise ValueError("row offsets must have length nrows + 1")
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.data):
            raise ValueError("row offsets must start at 0 and end at nnz")
        if len(self.indices) != len(self.data):
            raise ValueError("indices and values differ in length")
        if np.any(np.diff(self.indptr) < 0):
            raise ValueError("row offsets must be nondecreasing")
        if len(self.indices):
            if self.indices.min() < 0 or self.indices.max() >= self.ncols:
                raise ValueError("column index out of range")
            # strictly increasing inside each row
            steps = np.diff(self.indices)
            row_starts = self.indptr[1:-1]
            inner = np.ones(len(steps), dtype=bool)
            inner[row_starts[(row_starts > 0) & (row_starts < len(self.indices))] - 1] = False
            if np.any(steps[inner] <= 0):
                raise ValueError("column indices must be strictly increasing within a row")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return len(self.data)

    @property
    def T(self) -> "SparseMat":
        return transpose(self)

    def __repr__(self):
        return f"SparseMat({self.nrows}x{self.ncols}, nnz={self.nnz})"

    def __matmul__(self, x):
        if isinstance(x, SparseMat):
            return matmul(self, x)
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return spmv(self, x)
        if x.ndim == 2:
            if x.shape[0] != self.ncols:
                raise ValueError(f"shape mismatch: {self.shape} @ {x.shape}")
            return _csr_matmat(self.indptr, self.indices, self.data,
                               np.ascontiguousarray(x))
        raise ValueError("operand must be a vector or a 2-D array")

    def __mul__(self, alpha):
        alpha = float(alpha)
        if alpha == 0.0:
            return zeros(self.nrows, self.ncols)
        return SparseMat(self.nrows, self.ncols, self.indptr, self.indices,
                         alpha * self.data, check=False)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return self * (1.0 / float(alpha))

    def __neg__(self):
        return self * -1.0

    def __add__(self, other):
        if not isinstance(other, SparseMat):
            return NotImplemented
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch: {self.shape} + {other.shape}")
        r1, c1, v1 = self.coo()
        r2, c2, v2 = other.coo()
        return triplets_to_csr(Triplets(self.nrows, self.ncols,
                                        np.concatenate([r1, r2]),
                                        np.concatenate([c1, c2]),
                                        np.concatenate([v1, v2])))

    def __sub__(self, other):
        return self + (-other)

    def coo(self):
        """Return ``(rows, cols, values)`` arrays in stored order."""
        rows = np.repeat(np.arange(self.nrows, dtype=np.int64), np.diff(self.indptr))
        return rows, self.indices.copy(), self.data.copy()

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def toarray(self) -> np.ndarray:
        out = np.zeros(self.shape)
        rows, cols, vals = self.coo()
        out[rows, cols] = vals
        return out

    def diagonal(self) -> np.ndarray:
        k = min(self.nrows, self.ncols)
        out = np.zeros(k)
        rows, cols, vals = self.coo()
        on = (rows == cols)
        out[rows[on]] = vals[on]
        return out

    def is_diagonal(self) -> bool:
        rows, cols, _ = self.coo()
        return bool(np.all(rows == cols))

    def drop_zeros(self) -> "SparseMat":
        keep = self.data != 0.0
        if keep.all():
            return self
        rows, cols, vals = self.coo()
        return _from_sorted_coo(self.nrows, self.ncols, rows[keep], cols[keep], vals[keep])

    def scale_columns(self, s) -> "SparseMat":
        s = np.asarray(s, dtype=np.float64)
        return SparseMat(self.nrows, self.ncols, self.indptr, self.indices,
                         self.data * s[self.indices], check=False)

    def symmetry_defect(self) -> float:
        """Largest ``|a_ij - a_ji|`` relative to the largest ``|a_ij|``."""
        if self.nrows != self.ncols:
            raise ValueError("symmetry is only defined for square matrices")
        if self.nnz == 0:
            return 0.0
        d = self - transpose(self)
        scale = np.abs(self.data).max()
        return float(np.abs(d.data).max() / scale) if d.nnz else 0.0

    @classmethod
    def from_dense(cls, a) -> "SparseMat":
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        rows, cols = np.nonzero(a)
        return _from_sorted_coo(a.shape[0], a.shape[1], rows, cols, a[rows, cols])


@dataclass
class Triplets:
    """Coordinate-format staging area; duplicates are summed on conversion."""

    nrows: int
    ncols: int
    rows: Sequence[int] = field(default_factory=list)
    cols: Sequence[int] = field(default_factory=list)
    values: Sequence[float] = field(default_factory=list)

    @classmethod
    def from_entries(cls, nrows, ncols, entries):
        entries = list(entries)
        if not entries:
            return cls(nrows, ncols)
        r, c, v = zip(*entries)
        return cls(nrows, ncols, list(r), list(c), list(v))

    def append(self, i, j, v):
        self.rows.append(i)
        self.cols.append(j)
        self.values.append(v)


def triplets_to_csr(t: Triplets) -> SparseMat:
    """Convert coordinate entries to CSR, summing duplicates.

    Explicit zeros (including those produced by cancellation) are kept;
    builders that must not store zeros call :meth:`SparseMat.drop_zeros`.
    """
    rows = np.asarray(t.rows, dtype=np.int64).ravel()
    cols = np.asarray(t.cols, dtype=np.int64).ravel()
    vals = np.asarray(t.values, dtype=np.float64).ravel()
    if not (len(rows) == len(cols) == len(vals)):
        raise ValueError("triplet arrays differ in length")
    if t.nrows < 0 or t.ncols < 0:
        raise ValueError("negative matrix dimension")
    if len(rows):
        bad = (rows < 0) | (rows >= t.nrows) | (cols < 0) | (cols >= t.ncols)
        if bad.any():
            k = int(np.argmax(bad))
            raise IndexError(
                f"entry ({rows[k]}, {cols[k]}) out of range for {t.nrows}x{t.ncols} matrix")
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if len(rows) > 1:
        new = np.empty(len(rows), dtype=bool)
        new[0] = True
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        if not new.all():
            starts = np.flatnonzero(new)
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
    return _from_sorted_coo(t.nrows, t.ncols, rows, cols, vals)


def _from_sorted_coo(nrows, ncols, rows, cols, vals):
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=nrows), out=indptr[1:])
    return SparseMat(nrows, ncols, indptr, cols, vals, check=False)


def zeros(nrows, ncols) -> SparseMat:
    return SparseMat(nrows, ncols, np.zeros(nrows + 1, dtype=np.int64), [], [], check=False)


def identity(k: int) -> SparseMat:
    return diag(np.ones(k))


def diag(values) -> SparseMat:
    """Diagonal matrix; zero diagonal entries are not stored."""
    values = np.asarray(values, dtype=np.float64).ravel()
    k = len(values)
    idx = np.flatnonzero(values)
    return _from_sorted_coo(k, k, idx, idx, values[idx])


def tridiag(k: int, lo: float, di: float, up: float) -> SparseMat:
    """``k x k`` tridiagonal matrix with constant sub-, main and superdiagonal."""
    if k < 1:
        raise ValueError("tridiag needs k >= 1")
    i = np.arange(k)
    rows = np.concatenate([i[1:], i, i[:-1]])
    cols = np.concatenate([i[:-1], i, i[1:]])
    vals = np.concatenate([np.full(k - 1, lo), np.full(k, di), np.full(k - 1, up)])
    keep = vals != 0.0
    return triplets_to_csr(Triplets(k, k, rows[keep], cols[keep], vals[keep]))


def kron(a: SparseMat, b: SparseMat) -> SparseMat:
    """Kronecker product ``a ⊗ b``."""
    nrows, ncols = a.nrows * b.nrows, a.ncols * b.ncols
    if nrows > INDEX_MAX or ncols > INDEX_MAX:
        raise OverflowError(f"kron result {nrows}x{ncols} exceeds the index range")
    ra, ca, va = a.coo()
    rb, cb, vb = b.coo()
    rows = (ra[:, None] * b.nrows + rb[None, :]).ravel()
    cols = (ca[:, None] * b.ncols + cb[None, :]).ravel()
    vals = (va[:, None] * vb[None, :]).ravel()
    keep = vals != 0.0
    return triplets_to_csr(Triplets(nrows, ncols, rows[keep], cols[keep], vals[keep]))


@numba.njit(cache=True)
def _csr_matvec(indptr, indices, data, x):
    n = len(indptr) - 1
    y = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += data[p] * x[indices[p]]
        y[i] = acc
    return y


@numba.njit(cache=True)
def _csr_matvec_t(indptr, indices, data, x, ncols):
    y = np.zeros(ncols)
    for i in range(len(indptr) - 1):
        xi = x[i]
        for p in range(indptr[i], indptr[i + 1]):
            y[indices[p]] += data[p] * xi
    return y


@numba.njit(cache=True)
def _csr_matmat(indptr, indices, data, x):
    n = len(indptr) - 1
    k = x.shape[1]
    y = np.zeros((n, k))
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            a = data[p]
            j = indices[p]
            for c in range(k):
                y[i, c] += a * x[j, c]
    return y


def spmv(a: SparseMat, x) -> np.ndarray:
    """``a @ x``; each row is accumulated in stored order, so results are bit-reproducible."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (a.ncols,):
        raise ValueError(f"vector of length {x.shape} does not match {a.nrows}x{a.ncols} matrix")
    return _csr_matvec(a.indptr, a.indices, a.data, x)


def spmv_t(a: SparseMat, x) -> np.ndarray:
    """``a.T @ x`` without forming the transpose."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (a.nrows,):
        raise ValueError(f"vector of length {x.shape} does not match transpose of {a.nrows}x{a.ncols}")
    return _csr_matvec_t(a.indptr, a.indices, a.data, x, a.ncols)


def transpose(a: SparseMat) -> SparseMat:
    rows, cols, vals = a.coo()
    # stable sort by column keeps rows ascending within each new row
    order = np.argsort(cols, kind="stable")
    return _from_sorted_coo(a.ncols, a.nrows, cols[order], rows[order], vals[order])


def block(blocks, row_dims, col_dims) -> SparseMat:
    """Assemble a block matrix from a grid of ``SparseMat`` or ``None`` (zero)."""
    row_dims = [int(d) for d in row_dims]
    col_dims = [int(d) for d in col_dims]
    if len(blocks) != len(row_dims):
        raise ValueError("grid has wrong number of block rows")
    roff = np.concatenate([[0], np.cumsum(row_dims)])
    coff = np.concatenate([[0], np.cumsum(col_dims)])
    rows, cols, vals = [], [], []
    for i, brow in enumerate(blocks):
        if len(brow) != len(col_dims):
            raise ValueError(f"block row {i} has wrong number of cells")
        for j, blk in enumerate(brow):
            if blk is None:
                continue
            if blk.shape != (row_dims[i], col_dims[j]):
                raise ValueError(
                    f"block ({i}, {j}) is {blk.nrows}x{blk.ncols}, "
                    f"expected {row_dims[i]}x{col_dims[j]}")
            r, c, v = blk.coo()
            rows.append(r + roff[i])
            cols.append(c + coff[j])
            vals.append(v)
    nrows, ncols = int(roff[-1]), int(coff[-1])
    if not rows:
        return zeros(nrows, ncols)
    return triplets_to_csr(Triplets(nrows, ncols, np.concatenate(rows),
                                    np.concatenate(cols), np.concatenate(vals)))


def block3x3(blocks, row_dims, col_dims) -> SparseMat:
    if len(blocks) != 3 or any(len(r) != 3 for r in blocks):
        raise ValueError("block3x3 needs a 3x3 grid")
    if len(row_dims) != 3 or len(col_dims) != 3:
        raise ValueError("block3x3 needs three row and three column dimensions")
    return block(blocks, row_dims, col_dims)


def block_diag(mats) -> SparseMat:
    k = len(mats)
    grid = [[mats[i] if i == j else None for j in range(k)] for i in range(k)]
    return block(grid, [m.nrows for m in mats], [m.ncols for m in mats])


def hstack(mats) -> SparseMat:
    return block([list(mats)], [mats[0].nrows], [m.ncols for m in mats])


def vstack(mats) -> SparseMat:
    return block([[m] for m in mats], [m.nrows for m in mats], [mats[0].ncols])


@numba.njit(cache=True)
def _spgemm(n, ap, ai, ax, bp, bi, bx, ncols):
    # Gustavson: first pass counts, second pass fills with a dense accumulator.
    mark = np.full(ncols, -1, dtype=np.int64)
    cp = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        cnt = 0
        for p in range(ap[i], ap[i + 1]):
            k = ai[p]
            for q in range(bp[k], bp[k + 1]):
                j = bi[q]
                if mark[j] != i:
                    mark[j] = i
                    cnt += 1
        cp[i + 1] = cp[i] + cnt
    ci = np.empty(cp[n], dtype=np.int64)
    cx = np.empty(cp[n])
    acc = np.zeros(ncols)
    mark[:] = -1
    for i in range(n):
        top = cp[i]
        for p in range(ap[i], ap[i + 1]):
            k = ai[p]
            a = ax[p]
            for q in range(bp[k], bp[k + 1]):
                j = bi[q]
                if mark[j] != i:
                    mark[j] = i
                    ci[top] = j
                    top += 1
                    acc[j] = a * bx[q]
                else:
                    acc[j] += a * bx[q]
        seg = np.sort(ci[cp[i]:cp[i + 1]])
        ci[cp[i]:cp[i + 1]] = seg
        for p in range(cp[i], cp[i + 1]):
            cx[p] = acc[ci[p]]
    return cp, ci, cx


def matmul(a: SparseMat, b: SparseMat) -> SparseMat:
    """Sparse product ``a @ b`` (used for ``C S^{-1} C^T`` with diagonal ``S``)."""
    if a.ncols != b.nrows:
        raise ValueError(f"shape mismatch: {a.shape} @ {b.shape}")
    cp, ci, cx = _spgemm(a.nrows, a.indptr, a.indices, a.data,
                         b.indptr, b.indices, b.data, b.ncols)
    return SparseMat(a.nrows, b.ncols, cp, ci, cx, check=False)


def matrix_2norm(a: SparseMat, tol: float = 1e-10, maxit: int = 10000):
    """Spectral norm by power iteration on ``a.T @ a``.

    Starts from the normalised all-ones vector so repeated calls agree.

    Returns
    -------
    norm : float
        Best estimate of ``||a||_2``.
    converged : bool
        Whether the relative change of the eigenvalue estimate fell below
        ``tol`` within ``maxit`` steps.
    """
    if a.nnz == 0 or not np.any(a.data):
        raise ValueError("matrix_2norm needs a nonzero matrix")
    x = np.ones(a.ncols) / np.sqrt(a.ncols)
    lam = 0.0
    for _ in range(maxit):
        y = spmv_t(a, spmv(a, x))
        new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # start vector in the null space; fall back to a fixed alternating vector
            x = np.where(np.arange(a.ncols) % 2 == 0, 1.0, -0.5)
            x /= np.linalg.norm(x)
            continue
        x = y / ny
        if lam > 0.0 and abs(new - lam) <= tol * new:
            return float(np.sqrt(new)), True
        lam = new
    return float(np.sqrt(lam)), False
