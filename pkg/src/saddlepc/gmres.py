"""Full (unrestarted) GMRES with right preconditioning."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numba
import numpy as np

__all__ = ["GmresReport", "NumericalFailure", "arnoldi_mgs_step", "gmres_right"]

REORTH_THRESHOLD = 0.7


class NumericalFailure(ArithmeticError):
    pass


@dataclass
class GmresReport:
    iterations: int
    relres_history: list
    converged: bool
    x: np.ndarray = field(repr=False)
    true_final_relres: float
    wall_seconds: float
    breakdown: bool = False
    basis_orthogonality: float = 0.0


@numba.njit(cache=True)
def _mgs(V, k, w, h):
    for i in range(k):
        acc = 0.0
        for t in range(w.shape[0]):
            acc += V[i, t] * w[t]
        h[i] += acc
        for t in range(w.shape[0]):
            w[t] -= acc * V[i, t]


def arnoldi_mgs_step(basis, new_vec, threshold=REORTH_THRESHOLD):
    """Orthogonalize ``new_vec`` against the rows of ``basis``.

    Modified Gram-Schmidt, repeated once when the norm drops below
    ``threshold`` times its value before orthogonalization.

    Returns
    -------
    coeffs : ndarray
        Projection coefficients (summed over both passes).
    norm : float
        Norm of the orthogonalized vector.
    vec : ndarray
        The orthogonalized vector (not normalized).
    """
    V = np.ascontiguousarray(basis, dtype=np.float64)
    if V.ndim == 1:
        V = V[None, :]
    w = np.array(new_vec, dtype=np.float64)
    k = V.shape[0]
    h = np.zeros(k)
    before = np.linalg.norm(w)
    _mgs(V, k, w, h)
    norm = np.linalg.norm(w)
    if norm < threshold * before:
        _mgs(V, k, w, h)
        norm = np.linalg.norm(w)
    return h, float(norm), w


def _as_operator(op):
    if callable(op):
        return op
    return lambda v: op @ v


def gmres_right(op, precond, b, tol=1e-7, maxit=5000):
    """Solve ``op x = b`` by full GMRES on ``op(precond(.))``.

    With right preconditioning the least-squares residual is the residual
    of the original system, so the stopping test ``||b - op x|| / ||b|| < tol``
    is applied to the recurrence estimate.  The true residual is recomputed
    once at exit.  The initial guess is zero.

    Parameters
    ----------
    op : callable or matrix-like
        The system operator.
    precond : callable or None
        Applies the inverse of the preconditioner.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if maxit < 1:
        raise ValueError("maxit must be at least 1")
    apply_op = _as_operator(op)
    apply_pc = (lambda v: v) if precond is None else _as_operator(precond)
    b = np.asarray(b, dtype=np.float64)
    N = b.shape[0]
    beta = np.linalg.norm(b)
    t0 = time.perf_counter()
    if beta == 0.0:
        return GmresReport(0, [0.0], True, np.zeros(N), 0.0, time.perf_counter() - t0)

    cap = min(maxit, 64) + 1
    V = np.zeros((cap, N))
    V[0] = b / beta
    Hcols = []
    cs = np.zeros(maxit)
    sn = np.zeros(maxit)
    g = np.zeros(maxit + 1)
    g[0] = beta
    history = [1.0]
    converged = False
    breakdown = False
    k = 0
    while k < maxit:
        w = apply_op(apply_pc(V[k]))
        if not np.all(np.isfinite(w)):
            raise NumericalFailure(f"non-finite values in operator application at step {k + 1}")
        hk, hnext, w = arnoldi_mgs_step(V[:k + 1], w)
        col = np.zeros(k + 2)
        col[:k + 1] = hk
        col[k + 1] = hnext
        # previous rotations
        for i in range(k):
            t = cs[i] * col[i] + sn[i] * col[i + 1]
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1]
            col[i] = t
        r = np.hypot(col[k], col[k + 1])
        if r == 0.0:
            raise NumericalFailure(f"singular Hessenberg column at step {k + 1}")
        cs[k] = col[k] / r
        sn[k] = col[k + 1] / r
        col[k] = r
        col[k + 1] = 0.0
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]
        Hcols.append(col[:k + 1])
        k += 1
        rel = abs(g[k]) / beta
        history.append(float(rel))
        if not np.isfinite(rel):
            raise NumericalFailure(f"non-finite residual estimate at step {k}")
        if rel < tol:
            converged = True
            break
        if hnext <= np.finfo(float).eps * np.linalg.norm(hk, 1) or hnext == 0.0:
            # invariant subspace: the least-squares solution is exact
            breakdown = True
            converged = True
            break
        if k >= V.shape[0]:
            V = np.concatenate([V, np.zeros((min(V.shape[0], maxit + 1 - V.shape[0]), N))])
        V[k] = w / hnext

    R = np.zeros((k, k))
    for j, col in enumerate(Hcols):
        R[:j + 1, j] = col
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        y[i] = (g[i] - R[i, i + 1:k] @ y[i + 1:k]) / R[i, i]
    x = apply_pc(V[:k].T @ y)
    wall = time.perf_counter() - t0
    true_rel = float(np.linalg.norm(b - apply_op(x)) / beta)
    if not np.isfinite(true_rel):
        raise NumericalFailure("non-finite final residual")
    Vk = V[:k]
    # diagnostic only; skipped when it would cost more than the solve
    orth = float(np.linalg.norm(Vk @ Vk.T - np.eye(k))) if k * k * N <= 2e9 else float("nan")
    return GmresReport(k, history, converged, x, true_rel, wall, breakdown, orth)
