"""Up-looking sparse Cholesky in compressed-column layout, natural ordering.

Row ``k`` of ``L`` is found by a sparse triangular solve whose pattern is
the reach of column ``k`` of ``A`` in the elimination tree.
"""
from __future__ import annotations

import numba
import numpy as np

from .dense import NotPositiveDefiniteError
from .sparse import SparseMat

__all__ = ["SparseCholesky", "sparse_cholesky"]


@numba.njit(cache=True)
def _etree(n, ap, ai):
    # A symmetric and stored by rows, so row k below the diagonal is
    # the upper part of column k.
    parent = np.full(n, -1, dtype=np.int64)
    ancestor = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for p in range(ap[k], ap[k + 1]):
            i = ai[p]
            while i != -1 and i < k:
                inext = ancestor[i]
                ancestor[i] = k
                if inext == -1:
                    parent[i] = k
                i = inext
    return parent


@numba.njit(cache=True)
def _ereach(ap, ai, k, parent, s, w):
    n = len(parent)
    top = n
    w[k] = k
    for p in range(ap[k], ap[k + 1]):
        i = ai[p]
        if i > k:
            continue
        length = 0
        while w[i] != k:
            s[length] = i
            length += 1
            w[i] = k
            i = parent[i]
        while length > 0:
            top -= 1
            length -= 1
            # path scratch lives in s[:n], the reach pattern in s[n:]
            s[n + top] = s[length]
    return top


@numba.njit(cache=True)
def _symbolic(n, ap, ai, parent):
    counts = np.ones(n, dtype=np.int64)
    s = np.empty(2 * n, dtype=np.int64)
    w = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        top = _ereach(ap, ai, k, parent, s, w)
        for t in range(top, n):
            counts[s[n + t]] += 1
    lp = np.zeros(n + 1, dtype=np.int64)
    for j in range(n):
        lp[j + 1] = lp[j] + counts[j]
    return lp


@numba.njit(cache=True)
def _numeric(n, ap, ai, ax, parent, lp):
    li = np.empty(lp[n], dtype=np.int64)
    lx = np.empty(lp[n])
    c = lp[:n].copy()
    s = np.empty(2 * n, dtype=np.int64)
    w = np.full(n, -1, dtype=np.int64)
    x = np.zeros(n)
    for k in range(n):
        top = _ereach(ap, ai, k, parent, s, w)
        x[k] = 0.0
        for p in range(ap[k], ap[k + 1]):
            if ai[p] <= k:
                x[ai[p]] = ax[p]
        d = x[k]
        akk = d
        x[k] = 0.0
        for t in range(top, n):
            i = s[n + t]
            lki = x[i] / lx[lp[i]]
            x[i] = 0.0
            for p in range(lp[i] + 1, c[i]):
                x[li[p]] -= lx[p] * lki
            d -= lki * lki
            p = c[i]
            c[i] += 1
            li[p] = k
            lx[p] = lki
        # pivots lost to cancellation mean a singular matrix
        if not d > 4.0 * n * 2.220446049250313e-16 * akk:
            return li, lx, k, d
        p = c[k]
        c[k] += 1
        li[p] = k
        lx[p] = np.sqrt(d)
    return li, lx, -1, 0.0


@numba.njit(cache=True)
def _solve(lp, li, lx, b):
    n = len(lp) - 1
    x = b.copy()
    for j in range(n):
        x[j] /= lx[lp[j]]
        xj = x[j]
        for p in range(lp[j] + 1, lp[j + 1]):
            x[li[p]] -= lx[p] * xj
    for j in range(n - 1, -1, -1):
        acc = x[j]
        for p in range(lp[j] + 1, lp[j + 1]):
            acc -= lx[p] * x[li[p]]
        x[j] = acc / lx[lp[j]]
    return x


class SparseCholesky:
    """Factor ``L`` (CSC, diagonal first in each column) of an SPD matrix."""

    def __init__(self, n, lp, li, lx):
        self.n = n
        self.lp = lp
        self.li = li
        self.lx = lx

    @property
    def nnz(self):
        return len(self.lx)

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.n:
            raise ValueError(f"right-hand side has {b.shape[0]} rows, factor is {self.n}x{self.n}")
        if b.ndim == 2:
            out = np.empty_like(b)
            for j in range(b.shape[1]):
                out[:, j] = _solve(self.lp, self.li, self.lx, np.ascontiguousarray(b[:, j]))
            return out
        return _solve(self.lp, self.li, self.lx, np.ascontiguousarray(b))

    def L(self) -> SparseMat:
        """The factor as a row-stored matrix (for inspection and tests)."""
        from .sparse import Triplets, triplets_to_csr

        cols = np.repeat(np.arange(self.n), np.diff(self.lp))
        return triplets_to_csr(Triplets(self.n, self.n, self.li, cols, self.lx))


def sparse_cholesky(a: SparseMat) -> SparseCholesky:
    """Factor a symmetric positive definite sparse matrix.

    Only the entries on or above the diagonal are read, so ``a`` must be
    symmetric; callers check that.

    Raises
    ------
    NotPositiveDefiniteError
        Reporting the row at which a nonpositive pivot appeared.
    """
    if a.nrows != a.ncols:
        raise ValueError("Cholesky needs a square matrix")
    n = a.nrows
    parent = _etree(n, a.indptr, a.indices)
    lp = _symbolic(n, a.indptr, a.indices, parent)
    li, lx, bad, d = _numeric(n, a.indptr, a.indices, a.data, parent, lp)
    if bad >= 0:
        raise NotPositiveDefiniteError(int(bad), float(d))
    return SparseCholesky(n, lp, li, lx)
