"""Benchmark problem generators and MatrixMarket import/export."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .saddle import BlockSaddle, rhs_all_ones
from .solvers import DiagonalPlusRankOne
from .sparse import (SparseMat, Triplets, block_diag, diag, hstack, identity,
                     kron, tridiag, triplets_to_csr, vstack)

__all__ = [
    "Ex1Params",
    "Ex2Params",
    "gen_example1",
    "gen_example2",
    "example2_vector",
    "MatrixMarketError",
    "read_matrix_market",
    "write_matrix_market",
    "load_saddle",
    "generate",
    "random_saddle",
]


@dataclass(frozen=True)
class Ex1Params:
    p: int

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be at least 1")

    @property
    def h(self):
        return 1.0 / (self.p + 1)

    @property
    def dims(self):
        q = self.p * self.p
        return (2 * q, q, q)


@dataclass(frozen=True)
class Ex2Params:
    p: int
    choice: str = "decay"
    seed: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if self.choice not in ("decay", "sparse-random"):
            raise ValueError("choice must be 'decay' or 'sparse-random'")

    @property
    def dims(self):
        pt, ph = self.p * self.p, self.p * (self.p + 1)
        return (ph + 4 * pt, 2 * pt, ph)


def gen_example1(params) -> BlockSaddle:
    """Two-dimensional Laplacian blocks with Kronecker-structured couplings.

    ``A = blkdiag(L, L)`` with ``L = I⊗T + T⊗I``, ``B = [I⊗F, F⊗I]``,
    ``C = E⊗F`` where ``T = tridiag(-1, 2, -1)/h^2``, ``F = tridiag(0, 1, -1)/h``,
    ``E = diag(1, p+1, ..., p^2-p+1)`` and ``h = 1/(p+1)``.  The right-hand
    side makes the all-ones vector the exact solution.
    """
    if not isinstance(params, Ex1Params):
        params = Ex1Params(int(params))
    p, h = params.p, params.h
    I = identity(p)
    T = tridiag(p, -1.0, 2.0, -1.0) / h**2
    F = tridiag(p, 0.0, 1.0, -1.0) / h
    L = kron(I, T) + kron(T, I)
    A = block_diag([L, L])
    B = hstack([kron(I, F), kron(F, I)])
    E = diag(np.arange(p) * p + 1.0)
    C = kron(E, F)
    sys = BlockSaddle(A, B, C, name=f"ex1(p={p})")
    return rhs_all_ones(sys)[1]


def example2_vector(params: Ex2Params) -> np.ndarray:
    """The vector ``v`` defining ``W = v v^T``.

    ``decay``: ``v_i = exp(-2 (i/3)^2)`` for ``i = 1..p(p+1)``.
    ``sparse-random``: each entry is nonzero with probability 0.05, values
    uniform in (0, 1]; drawn from ``numpy``'s PCG64 generator seeded with
    ``seed`` and redrawn while all entries are zero.
    """
    ph = params.p * (params.p + 1)
    if params.choice == "decay":
        i = np.arange(1, ph + 1)
        return np.exp(-2.0 * (i / 3.0) ** 2)
    rng = np.random.Generator(np.random.PCG64(params.seed))
    while True:
        mask = rng.random(ph) < 0.05
        vals = 1.0 - rng.random(ph)
        v = np.where(mask, vals, 0.0)
        if np.any(v):
            return v


def gen_example2(params) -> BlockSaddle:
    """Block-diagonal ``A`` with a rank-one-updated leading block.

    ``A = blkdiag(2 W^T W + I, D2, D3)`` with ``W = v v^T``, so the leading
    block equals ``I + 2 (v^T v) v v^T`` and is kept implicit.
    ``B = [E, -I, I]`` and ``C = E^T`` with ``E = [Ê⊗I; I⊗Ê]`` and ``Ê`` the
    ``p x (p+1)`` bidiagonal matrix with 2 on the diagonal and -1 above it.
    """
    if not isinstance(params, Ex2Params):
        params = Ex2Params(int(params))
    p = params.p
    pt, ph = p * p, p * (p + 1)
    v = example2_vector(params)
    j = np.arange(1, 2 * pt + 1, dtype=np.float64)
    d2 = np.where(j <= pt, 1.0, 1e-5 * (j - pt) ** 2)
    d3 = 1e-5 * (j + pt) ** 2
    d = np.concatenate([np.ones(ph), d2, d3])
    u = np.concatenate([v, np.zeros(4 * pt)])
    A = DiagonalPlusRankOne(d, u, 2.0 * float(v @ v))

    k = np.arange(p)
    Eh = triplets_to_csr(Triplets(p, p + 1, np.concatenate([k, k]), np.concatenate([k, k + 1]),
                                  np.concatenate([np.full(p, 2.0), np.full(p, -1.0)])))
    Ip = identity(p)
    E = vstack([kron(Eh, Ip), kron(Ip, Eh)])
    I2 = identity(2 * pt)
    B = hstack([E, -I2, I2])
    C = E.T
    tag = "decay" if params.choice == "decay" else f"sparse-random,seed={params.seed}"
    sys = BlockSaddle(A, B, C, name=f"ex2(p={p},{tag})")
    return rhs_all_ones(sys)[1]


# --- MatrixMarket -------------------------------------------------------------

class MatrixMarketError(ValueError):
    def __init__(self, path, lineno, msg):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {msg}")


def read_matrix_market(path) -> SparseMat:
    """Read a real coordinate MatrixMarket file (general or symmetric)."""
    with open(path, "r", newline=None) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    banner = lines[0].strip().split()
    if len(banner) != 5 or banner[0] != "%%MatrixMarket" or banner[1].lower() != "matrix":
        raise MatrixMarketError(path, 1, "missing or malformed %%MatrixMarket banner")
    fmt, field, symmetry = (s.lower() for s in banner[2:])
    if fmt != "coordinate":
        raise MatrixMarketError(path, 1, f"unsupported format {fmt!r} (only coordinate)")
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError(path, 1, f"unsupported field {field!r} (only real)")
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(path, 1, f"unsupported symmetry {symmetry!r}")

    body = [(i + 1, ln) for i, ln in enumerate(lines[1:], start=1)
            if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError(path, len(lines), "missing size line")
    lineno, size_line = body[0]
    try:
        nrows, ncols, nnz = (int(t) for t in size_line.split())
    except ValueError:
        raise MatrixMarketError(path, lineno, "size line must hold three integers") from None
    if nrows < 0 or ncols < 0 or nnz < 0:
        raise MatrixMarketError(path, lineno, "negative size")
    entries = body[1:]
    if len(entries) != nnz:
        at = entries[-1][0] if entries else lineno
        raise MatrixMarketError(path, at, f"expected {nnz} entries, found {len(entries)}")
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for k, (ln, text) in enumerate(entries):
        parts = text.split()
        if len(parts) != 3:
            raise MatrixMarketError(path, ln, "entry must be 'row col value'")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise MatrixMarketError(path, ln, "malformed entry") from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(path, ln, f"index ({i}, {j}) out of range")
        if symmetry == "symmetric" and j > i:
            raise MatrixMarketError(path, ln, "symmetric file stores an upper-triangle entry")
        rows[k], cols[k], vals[k] = i - 1, j - 1, v
    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (np.concatenate([rows, cols[off]]),
                            np.concatenate([cols, rows[off]]),
                            np.concatenate([vals, vals[off]]))
    return triplets_to_csr(Triplets(nrows, ncols, rows, cols, vals))


def write_matrix_market(a: SparseMat, path) -> None:
    """Write ``a`` as a general real coordinate file, row-major, 17 significant digits."""
    rows, cols, vals = a.coo()
    with open(path, "w", newline="\n") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{a.nrows} {a.ncols} {a.nnz}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def load_saddle(a_path, b_path, c_path) -> BlockSaddle:
    """Build a system from three MatrixMarket files; ``b`` makes ones the exact solution."""
    A = read_matrix_market(a_path)
    B = read_matrix_market(b_path)
    C = read_matrix_market(c_path)
    if A.nrows != A.ncols:
        raise ValueError(f"A must be square, got {A.nrows}x{A.ncols}")
    if B.ncols != A.nrows:
        raise ValueError(f"B has {B.ncols} columns but A is {A.nrows}x{A.ncols}")
    if C.ncols != B.nrows:
        raise ValueError(f"C has {C.ncols} columns but B has {B.nrows} rows")
    name = "mm(" + ",".join(os.path.basename(str(p)) for p in (a_path, b_path, c_path)) + ")"
    return rhs_all_ones(BlockSaddle(A, B, C, name=name))[1]


def random_saddle(n: int, m: int, l: int, seed: int = 0, density: float = 0.3) -> BlockSaddle:
    """Small random system with SPD ``A`` and full-row-rank ``B``, ``C``.

    ``A = G G^T / n + I`` for a random sparse ``G``; ``B`` and ``C`` are
    random sparse matrices with an identity added on their leading square
    part, which keeps them full row rank.  Needs ``l <= m <= n``.
    """
    if not 1 <= l <= m <= n:
        raise ValueError("random_saddle needs 1 <= l <= m <= n")
    rng = np.random.Generator(np.random.PCG64(seed))

    def sprand(r, c):
        return np.where(rng.random((r, c)) < density, rng.standard_normal((r, c)), 0.0)

    G = sprand(n, n)
    A = G @ G.T / n + np.eye(n)
    A = 0.5 * (A + A.T)
    B = sprand(m, n)
    B[:, :m] += 2.0 * np.eye(m)
    C = sprand(l, m)
    C[:, :l] += 2.0 * np.eye(l)
    sys = BlockSaddle(SparseMat.from_dense(A), SparseMat.from_dense(B), SparseMat.from_dense(C),
                      name=f"random(n={n},m={m},l={l},seed={seed})")
    return rhs_all_ones(sys)[1]


def generate(problem: str, p: int, choice: str = "decay", seed: int = 0) -> BlockSaddle:
    if problem == "ex1":
        return gen_example1(Ex1Params(p))
    if problem == "ex2":
        return gen_example2(Ex2Params(p, choice, seed))
    raise ValueError(f"unknown problem {problem!r}")
