"""Spectral certification of the preconditioned operators and CSV export."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import (QR_EIGEN_CAP, chol, chol_solve, dense_image, lu_solve, nullspace_basis,
                    qr_eigen, sym_eigen)
from .preconditioners import PrecondP, build_preconditioner
from .saddle import BlockSaddle, assemble_skew, build_S, exact_schur
from .solvers import matvec, spd_solver, to_dense
from .sparse import matmul, spmv, spmv_t, transpose

__all__ = [
    "SpectrumReport",
    "preconditioned_spectrum",
    "check_unit_eigvec_family",
    "check_nonunit_eigvec_family",
    "minimal_poly_check",
    "spectrum_to_csv",
    "read_spectrum_csv",
    "WHICH",
]

WHICH = ("raw", "PD", "P1", "P")
UNIT_TOL = 1e-6
IMAG_RATIO_TOL = 1e-8
ZERO_TOL = 1e-10
INTERVAL_SLACK = 1e-8
# "auto" precision switches to long double at or below this size
EXTENDED_CAP = 400


@dataclass
class SpectrumReport:
    which: str
    eigenvalues: np.ndarray = field(repr=False)
    n_unit: int
    max_imag_ratio: float
    interval_lo: float = float("nan")
    interval_hi: float = float("nan")
    violations: list = field(default_factory=list)
    expected_unit: int = 0

    @property
    def n_outside(self):
        return self.eigenvalues.size - self.n_unit

    @property
    def std_about_one(self) -> float:
        """Root mean square of ``|lambda - 1|``."""
        if self.eigenvalues.size == 0:
            return 0.0
        return float(np.sqrt(np.mean(np.abs(self.eigenvalues - 1.0) ** 2)))

    @property
    def passed(self):
        return not self.violations


def _schur_bounds(sys, S, cap):
    schur = sym_eigen(exact_schur(sys, cap))
    s = sym_eigen(0.5 * (to_dense(S) + to_dense(S).T))
    return float(schur[0] / s[-1]), float(schur[-1] / s[0])


def _dense_operator(sys, precond, precision):
    if precision == "double":
        if precond is None:
            return dense_image(sys.matvec, sys.size)
        return dense_image(lambda e: precond.apply_inv(sys.matvec(e)), sys.size)
    K = assemble_skew(sys).toarray().astype(np.longdouble)
    if precond is None:
        return K
    return lu_solve(precond.toarray(), K, dtype=np.longdouble)


def preconditioned_spectrum(sys: BlockSaddle, S=None, which="P", *, unit_tol=UNIT_TOL,
                            imag_tol=IMAG_RATIO_TOL, cap=QR_EIGEN_CAP,
                            precond=None, precision="auto") -> SpectrumReport:
    """Dense spectrum of ``M^{-1} B`` for ``M`` in ``raw`` (identity), ``PD``, ``P1``, ``P``.

    In double precision the operator is formed column by column from
    unit-vector probes of the preconditioner solve.  The eigenvalue 1 is
    defective in general, and its computed copies scatter by about
    ``sqrt(eps * ||P^-1 B||)``, which can exceed the certification
    tolerances.  ``precision="extended"`` therefore assembles ``M`` and
    ``B``, solves ``M H = B`` and runs the QR iteration in long double;
    ``"auto"`` does so for systems of at most ``EXTENDED_CAP`` unknowns.

    For ``which="P"`` the report is checked against the predicted
    structure: real, nonzero eigenvalues, at least ``n + l`` of them at 1
    and the rest inside
    ``[lmin(B A^-1 B^T) / lmax(S), lmax(B A^-1 B^T) / lmin(S)]``.
    """
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    if sys.size > cap:
        raise ValueError(f"system size {sys.size} exceeds the dense cap {cap}")
    if S is None:
        S, _ = build_S(sys, "identity")
    if precond is None:
        precond = build_preconditioner("none" if which == "raw" else which, sys, S)
    if precision == "auto":
        precision = "extended" if sys.size <= EXTENDED_CAP else "double"
    eigs = qr_eigen(_dense_operator(sys, precond, precision), cap=cap, precision=precision)

    re_max = float(np.abs(eigs.real).max()) if eigs.size else 0.0
    im_max = float(np.abs(eigs.imag).max()) if eigs.size else 0.0
    ratio = im_max / re_max if re_max > 0 else (0.0 if im_max == 0 else float("inf"))
    unit = np.abs(eigs - 1.0) <= unit_tol
    report = SpectrumReport(which, eigs, int(unit.sum()), ratio)
    if which != "P":
        return report

    report.expected_unit = sys.n + sys.l
    report.interval_lo, report.interval_hi = _schur_bounds(sys, S, cap)
    v = report.violations
    if ratio > imag_tol:
        v.append((complex(eigs[np.argmax(np.abs(eigs.imag))]), "imaginary part too large"))
    for lam in eigs[np.abs(eigs) <= ZERO_TOL]:
        v.append((complex(lam), "eigenvalue at zero"))
    if report.n_unit < report.expected_unit:
        v.append((1.0 + 0j, f"only {report.n_unit} unit eigenvalues, expected {report.expected_unit}"))
    lo, hi = report.interval_lo - INTERVAL_SLACK, report.interval_hi + INTERVAL_SLACK
    for lam in eigs[~unit]:
        if not lo <= lam.real <= hi:
            v.append((complex(lam), "outside the predicted interval"))
    return report


def _P(sys, S, precond):
    if precond is not None:
        return precond
    return PrecondP(sys, S, spd_solver(S))


def _apply_H(P, sys, v):
    return P.apply_inv(sys.matvec(v))


def check_unit_eigvec_family(sys: BlockSaddle, S, trials=20, *, seed=0, tol=1e-8,
                             perturb=0.0, precond=None):
    """Check that ``(x; -S^{-1} B x; z)`` is fixed by ``P^{-1} B`` for random ``x``, ``z``.

    ``perturb`` adds a random vector of that norm to the middle block, as a
    negative control.  Returns ``(ok, worst_ratio, failing_trial)`` where
    ``failing_trial`` is ``None`` when every trial passes.
    """
    P = _P(sys, S, precond)
    rng = np.random.default_rng(seed)
    worst, bad = 0.0, None
    for t in range(trials):
        x = rng.standard_normal(sys.n)
        z = rng.standard_normal(sys.l)
        y = -P.solver_S.solve(spmv(sys.B, x))
        if perturb:
            d = rng.standard_normal(sys.m)
            y = y + perturb * d / np.linalg.norm(d)
        w = np.concatenate([x, y, z])
        ratio = float(np.linalg.norm(_apply_H(P, sys, w) - w) / np.linalg.norm(w))
        worst = max(worst, ratio)
        if ratio > tol and bad is None:
            bad = t
    return bad is None, worst, bad


def check_nonunit_eigvec_family(sys: BlockSaddle, S, *, tol=1e-7, precond=None):
    """Check the eigenvectors ``(-A^{-1} B^T y; y; z)`` with ``y`` in null(C).

    With ``Z`` an orthonormal basis of null(C) and ``K = B A^{-1} B^T``,
    each eigenpair ``(lambda, u)`` of the pencil ``(Z^T K Z, Z^T S Z)``
    gives ``y = Z u``, with ``lambda = y^T K y / y^T S y``.  The third
    block ``z`` is the solution of ``(1 - lambda) C^T z = K y - lambda S y``,
    which lies in the range of ``C^T``; ``z = 0`` only when that right-hand
    side vanishes.  Each vector ``w`` must satisfy
    ``||P^{-1} B w - lambda w|| <= tol max(1, |lambda|) ||w||``; the
    ``|lambda|`` factor keeps the test meaningful when ``S`` is much
    smaller than the Schur complement and ``lambda`` is huge.

    Returns ``(ok, worst_ratio, lambdas)`` with ``worst_ratio`` the largest
    scaled residual; vacuously true when null(C) is trivial.
    """
    if sys.m <= sys.l:
        return True, 0.0, np.zeros(0)
    P = _P(sys, S, precond)
    B, C = sys.B, sys.C
    Z = nullspace_basis(C.toarray())
    KZ = B @ sys.solver_A.solve(B.T @ Z)
    SZ = np.column_stack([matvec(S, Z[:, j]) for j in range(Z.shape[1])])
    # reduce the pencil to a standard symmetric problem with L^{-1} (.) L^{-T}
    L = chol(0.5 * (Z.T @ SZ + SZ.T @ Z))
    Linv = lu_solve(L, np.eye(L.shape[0]))
    M = Linv @ (Z.T @ KZ) @ Linv.T
    _, U = sym_eigen(0.5 * (M + M.T), vectors=True)
    CCt = chol(matmul(C, transpose(C)).toarray())
    worst = 0.0
    lams = np.empty(U.shape[1])
    for j in range(U.shape[1]):
        y = Z @ (Linv.T @ U[:, j])
        u = sys.solver_A.solve(spmv_t(B, y))
        Ky = spmv(B, u)
        lam = float(Ky @ y / (y @ matvec(S, y)))
        lams[j] = lam
        rhs = Ky - lam * matvec(S, y)
        if abs(1.0 - lam) > 1e-12:
            z = chol_solve(CCt, spmv(C, rhs)) / (1.0 - lam)
        else:
            z = np.zeros(sys.l)
        w = np.concatenate([-u, y, z])
        r = float(np.linalg.norm(_apply_H(P, sys, w) - lam * w) / np.linalg.norm(w))
        worst = max(worst, r / max(1.0, abs(lam)))
    return worst <= tol, worst, lams


def minimal_poly_check(sys: BlockSaddle, trials=20, S=None, *, seed=0, precond=None) -> float:
    """Largest ``||(H - I)^2 v|| / ||v||`` over random ``v``, ``H = P^{-1} B``.

    ``S`` defaults to the exact Schur complement, for which the ratio
    vanishes in exact arithmetic.  Only operator applications are used.
    """
    if S is None and precond is None:
        S, _ = build_S(sys, "exact")
    P = _P(sys, S, precond)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        v = rng.standard_normal(sys.size)
        u = _apply_H(P, sys, v) - v
        u = _apply_H(P, sys, u) - u
        worst = max(worst, float(np.linalg.norm(u) / np.linalg.norm(v)))
    return worst


def _sorted(eigs):
    eigs = np.asarray(eigs, dtype=np.complex128).ravel()
    return eigs[np.lexsort((eigs.imag, eigs.real))]


def spectrum_to_csv(report, path) -> None:
    """Write ``re,im`` rows with 17 significant digits, sorted by real then imaginary part."""
    eigs = report.eigenvalues if isinstance(report, SpectrumReport) else report
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write("re,im\n")
        for lam in _sorted(eigs):
            fh.write(f"{lam.real:.17g},{lam.imag:.17g}\n")


def read_spectrum_csv(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "re,im":
            raise ValueError(f"{path}: expected header 're,im', got {header!r}")
        rows = [ln.split(",") for ln in fh.read().splitlines() if ln]
    return np.array([float(a) + 1j * float(b) for a, b in rows], dtype=np.complex128)
