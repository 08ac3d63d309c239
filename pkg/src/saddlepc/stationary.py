"""The splitting iteration ``x <- P^{-1}(R x + b)``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import QR_EIGEN_CAP, dense_image, qr_eigen
from .preconditioners import PrecondP, apply_R
from .saddle import BlockSaddle
from .solvers import spd_solver

__all__ = ["StationaryReport", "stationary_solve", "stationary_step",
           "iteration_matrix", "iteration_matrix_spectrum", "spectral_radius"]


@dataclass
class StationaryReport:
    iterations: int
    relres_history: list
    converged: bool
    final_x: np.ndarray = field(repr=False)
    observed_rate: float


def _precond(sys, S, precond):
    if precond is not None:
        return precond
    return PrecondP(sys, S, spd_solver(S))


def stationary_step(P: PrecondP, x, b):
    return P.apply_inv(apply_R(P.sys, P.S, x) + b)


def _observed_rate(history, floor):
    ratios = [history[k + 1] / history[k] for k in range(len(history) - 1)
              if history[k] > floor and history[k + 1] > floor]
    tail = ratios[-10:]
    if not tail:
        return 0.0
    return float(np.exp(np.mean(np.log(tail))))


def stationary_solve(sys: BlockSaddle, S, x0=None, tol=1e-7, maxit=5000, *,
                     b=None, precond: PrecondP = None,
                     divergence_limit=1e12) -> StationaryReport:
    """Run the splitting iteration until the relative residual drops below ``tol``.

    The residual ``||b - Bx|| / ||b||`` is recomputed from the operator at
    every step.  Iteration also stops once it exceeds ``divergence_limit``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    P = _precond(sys, S, precond)
    b = sys.b if b is None else np.asarray(b, dtype=np.float64)
    x = np.zeros(sys.size) if x0 is None else np.array(x0, dtype=np.float64)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        res = np.linalg.norm(sys.matvec(x))
        if res == 0.0:
            return StationaryReport(0, [0.0], True, x, 0.0)
        nb = 1.0
    floor = 1e3 * np.finfo(float).eps
    history = [float(np.linalg.norm(b - sys.matvec(x)) / nb)]
    k = 0
    while history[-1] >= tol and k < maxit:
        x = stationary_step(P, x, b)
        k += 1
        rel = float(np.linalg.norm(b - sys.matvec(x)) / nb)
        history.append(rel)
        if not np.isfinite(rel) or rel > divergence_limit:
            break
    converged = history[-1] < tol
    return StationaryReport(k, history, converged, x, _observed_rate(history, floor))


def iteration_matrix(sys: BlockSaddle, S, cap=QR_EIGEN_CAP, precond=None) -> np.ndarray:
    """Dense ``G = P^{-1} R`` formed column by column."""
    if sys.size > cap:
        raise ValueError(f"system size {sys.size} exceeds the dense cap {cap}")
    P = _precond(sys, S, precond)
    return dense_image(lambda e: P.apply_inv(apply_R(sys, S, e)), sys.size)


def iteration_matrix_spectrum(sys: BlockSaddle, S, cap=QR_EIGEN_CAP, precond=None) -> np.ndarray:
    return qr_eigen(iteration_matrix(sys, S, cap, precond), cap=cap)


def spectral_radius(eigs) -> float:
    eigs = np.asarray(eigs)
    return float(np.abs(eigs).max()) if eigs.size else 0.0
