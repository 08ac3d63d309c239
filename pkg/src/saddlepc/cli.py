"""Command-line front end: ``saddlepc {solve,table,spectrum,verify}``."""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys as _sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .dense import QR_EIGEN_CAP
from .gmres import gmres_right
from .preconditioners import build_preconditioner
from .problems import Ex1Params, Ex2Params, generate, load_saddle
from .saddle import SChoice, build_S, check_norm_condition, check_theorem_condition, err_metric
from .spectrum import (WHICH, check_nonunit_eigvec_family, check_unit_eigvec_family,
                       minimal_poly_check, preconditioned_spectrum, spectrum_to_csv)
from .stationary import iteration_matrix_spectrum, spectral_radius, stationary_solve

__all__ = ["RunConfig", "TableRow", "cmd_solve", "cmd_table", "cmd_spectrum", "cmd_verify",
           "build_parser", "main", "TABLE_HEADER"]

TABLE_HEADER = ["precond", "p", "total_dim", "setup_seconds", "iters", "cpu_seconds", "err"]
PRECONDS = ("none", "PD", "P1", "P")


@dataclass
class RunConfig:
    problem: str = "ex1"
    p: List[int] = field(default_factory=lambda: [8])
    precond: List[str] = field(default_factory=lambda: ["PD", "P1", "P"])
    s_strategy: str = "identity"
    s_scale: float = 1.0
    choice: str = "decay"
    seed: int = 0
    tol: float = 1e-7
    maxit: int = 5000
    out: Optional[str] = None
    operators: List[str] = field(default_factory=lambda: list(WHICH))
    desk_cap: int = QR_EIGEN_CAP
    jobs: int = 1
    mm: Optional[List[str]] = None
    precision: str = "auto"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.maxit < 1:
            raise ValueError("maxit must be at least 1")
        if self.problem not in ("ex1", "ex2", "mm"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.problem == "mm" and (not self.mm or len(self.mm) != 3):
            raise ValueError("problem 'mm' needs three MatrixMarket paths (A, B, C)")
        for label in self.precond:
            if label not in PRECONDS:
                raise ValueError(f"unknown preconditioner {label!r}; choose from {PRECONDS}")
        for label in self.operators:
            if label not in WHICH:
                raise ValueError(f"unknown operator {label!r}; choose from {WHICH}")
        SChoice(self.s_strategy, scale=self.s_scale)
        if self.s_strategy == "exact" and self.problem != "mm":
            for p in self.p:
                m = self.dims(p)[1]
                if m > self.desk_cap:
                    raise ValueError(f"exact S of size {m} (p={p}) exceeds the desk cap {self.desk_cap}")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.precision not in ("auto", "double", "extended"):
            raise ValueError("precision must be auto, double or extended")

    def dims(self, p):
        if self.problem == "ex1":
            return Ex1Params(p).dims
        return Ex2Params(p, self.choice, self.seed).dims

    def system(self, p):
        if self.problem == "mm":
            return load_saddle(*self.mm)
        return generate(self.problem, p, self.choice, self.seed)

    @property
    def s_choice(self):
        return SChoice(self.s_strategy, scale=self.s_scale)


@dataclass
class TableRow:
    precond: str
    p: int
    total_dim: int
    setup_seconds: float = float("nan")
    iters: Optional[int] = None
    cpu_seconds: float = float("nan")
    err: Optional[float] = None
    error: Optional[str] = None

    def csv_fields(self):
        def num(x, fmt):
            return "" if x is None or not np.isfinite(x) else format(x, fmt)
        return [self.precond, str(self.p), str(self.total_dim), num(self.setup_seconds, ".4f"),
                "" if self.iters is None else str(self.iters), num(self.cpu_seconds, ".4f"),
                num(self.err, ".6e")]


def _solve_one(cfg: RunConfig, p: int, label: str, sys=None) -> TableRow:
    try:
        if sys is None:
            sys = cfg.system(p)
    except Exception as exc:  # noqa: BLE001 -- reported per row
        return TableRow(label, p, 0, error=f"generation failed: {exc}")
    row = TableRow(label, p, sys.size)
    try:
        t0 = time.perf_counter()
        pc = None
        if label != "none":
            S, solver_S = build_S(sys, cfg.s_choice, cap=cfg.desk_cap)
            pc = build_preconditioner(label, sys, S, solver_S)
        row.setup_seconds = time.perf_counter() - t0
        rep = gmres_right(sys.matvec, pc, sys.b, tol=cfg.tol, maxit=cfg.maxit)
    except Exception as exc:  # noqa: BLE001
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    row.cpu_seconds = rep.wall_seconds
    if rep.converged:
        row.iters = rep.iterations
        row.err = err_metric(rep.x, np.ones(sys.size))
    return row


def _solve_p(args):
    cfg, p = args
    try:
        sys = cfg.system(p)
    except Exception as exc:  # noqa: BLE001
        return [TableRow(label, p, 0, error=f"generation failed: {exc}") for label in cfg.precond]
    return [_solve_one(cfg, p, label, sys) for label in cfg.precond]


def cmd_solve(cfg: RunConfig) -> List[TableRow]:
    """Run GMRES for every ``(p, preconditioner)`` pair of the grid.

    Failures are recorded on their row and the grid continues.  Rows for
    different ``p`` run in separate processes when ``cfg.jobs > 1``.
    """
    ps = cfg.p if cfg.problem != "mm" else cfg.p[:1]
    if cfg.jobs > 1 and len(ps) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            groups = list(pool.map(_solve_p, [(cfg, p) for p in ps]))
    else:
        groups = [_solve_p((cfg, p)) for p in ps]
    return [row for g in groups for row in g]


def format_rows(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def write_table(rows, path=None) -> None:
    text = format_rows(rows)
    if path:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)


def cmd_table(cfg: RunConfig) -> List[TableRow]:
    rows = cmd_solve(cfg)
    write_table(rows, cfg.out)
    for r in rows:
        if r.error:
            print(f"warning: {r.precond} p={r.p}: {r.error}", file=_sys.stderr)
    return rows


def spectrum_filename(problem, p, op):
    return f"{problem}_p{p}_{op}.csv"


def cmd_spectrum(cfg: RunConfig) -> List[str]:
    """Write one ``re,im`` CSV per requested operator into the directory ``cfg.out``."""
    out = cfg.out or "."
    if not os.path.isdir(out):
        raise FileNotFoundError(f"output directory {out!r} does not exist")
    written = []
    for p in cfg.p:
        if not cfg.operators:
            continue
        sys = cfg.system(p)
        if sys.size > cfg.desk_cap:
            raise ValueError(f"system size {sys.size} exceeds the desk cap {cfg.desk_cap}")
        S, solver_S = build_S(sys, cfg.s_choice, cap=cfg.desk_cap)
        for op in cfg.operators:
            pc = build_preconditioner("none" if op == "raw" else op, sys, S, solver_S)
            rep = preconditioned_spectrum(sys, S, op, cap=cfg.desk_cap, precond=pc,
                                          precision=cfg.precision)
            path = os.path.join(out, spectrum_filename(cfg.problem, p, op))
            spectrum_to_csv(rep, path)
            written.append(path)
    return written


@dataclass
class Check:
    name: str
    status: str  # "pass", "fail", "info" or "n/a"
    detail: str = ""


def verify_system(sys, S, solver_S, exact: bool, cap=QR_EIGEN_CAP) -> List[Check]:
    """Run the certification suite on one system and ``S``."""
    checks = []
    holds, lam = check_theorem_condition(sys, S, cap)
    checks.append(Check("condition 2S - BA^-1B^T > 0", "info",
                        f"{'holds' if holds else 'fails'} (lambda_min = {lam:.3e})"))

    nholds, lhs, rhs = check_norm_condition(sys, S, solver_S)
    ok = holds or not nholds
    checks.append(Check("norm test implies condition", "pass" if ok else "fail",
                        f"||B||^2 = {lhs:.3e}, 2 lmin(A) lmin(S) = {rhs:.3e}"))

    P = build_preconditioner("P", sys, S, solver_S)
    st = stationary_solve(sys, S, precond=P)
    rho = spectral_radius(iteration_matrix_spectrum(sys, S, cap, precond=P))
    if holds:
        ok = st.converged and rho < 1
    elif rho > 1:
        ok = not st.converged
    else:
        ok = True
    checks.append(Check("stationary iteration consistent with condition", "pass" if ok else "fail",
                        f"rho(G) = {rho:.3e}, converged = {st.converged} after {st.iterations} steps"))

    rep = preconditioned_spectrum(sys, S, "P", cap=cap, precond=P)
    detail = (f"n_unit = {rep.n_unit} (need {rep.expected_unit}), imag ratio = "
              f"{rep.max_imag_ratio:.1e}, interval [{rep.interval_lo:.4g}, {rep.interval_hi:.4g}]")
    if rep.violations:
        lam0, why = rep.violations[0]
        detail += f"; {len(rep.violations)} violations, first: {why} at {lam0:.6g}"
    checks.append(Check("spectrum of P^-1 B", "pass" if rep.passed else "fail", detail))

    ok, worst, _ = check_unit_eigvec_family(sys, S, precond=P)
    checks.append(Check("unit eigenvector family", "pass" if ok else "fail", f"worst {worst:.1e}"))
    ok, worst, lams = check_nonunit_eigvec_family(sys, S, precond=P)
    checks.append(Check("non-unit eigenvector family", "pass" if ok else "fail",
                        f"{lams.size} vectors, worst {worst:.1e}"))

    if exact:
        r = minimal_poly_check(sys, 20, S, precond=P)
        checks.append(Check("(P^-1 B - I)^2 = 0", "pass" if r <= 1e-8 else "fail", f"max ratio {r:.1e}"))
        g = gmres_right(sys.matvec, P, sys.b)
        ok = g.converged and g.iterations <= 2
        checks.append(Check("GMRES two-step convergence", "pass" if ok else "fail",
                            f"{g.iterations} iterations"))
    else:
        checks.append(Check("(P^-1 B - I)^2 = 0", "n/a", "needs S = B A^-1 B^T"))
        checks.append(Check("GMRES two-step convergence", "n/a", "needs S = B A^-1 B^T"))
    return checks


def cmd_verify(cfg: RunConfig, stream=None) -> int:
    stream = _sys.stdout if stream is None else stream
    failed = False
    for p in cfg.p:
        sys = cfg.system(p)
        if sys.size > cfg.desk_cap:
            raise ValueError(f"system size {sys.size} exceeds the desk cap {cfg.desk_cap}")
        S, solver_S = build_S(sys, cfg.s_choice, cap=cfg.desk_cap)
        print(f"{sys.name}  S={cfg.s_strategy} scale={cfg.s_scale:g}  dims={sys.dims}", file=stream)
        for c in verify_system(sys, S, solver_S, cfg.s_strategy == "exact", cfg.desk_cap):
            failed |= c.status == "fail"
            print(f"  [{c.status.upper():4}] {c.name}: {c.detail}", file=stream)
    return 1 if failed else 0


def _csv_list(conv=str):
    def parse(text):
        return [conv(t.strip()) for t in text.split(",") if t.strip()]
    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="saddlepc",
                                 description="Block preconditioners for 3x3 saddle point systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", choices=["ex1", "ex2", "mm"], default="ex1")
    common.add_argument("--p", type=_csv_list(int), default=[8], help="comma-separated grid sizes")
    common.add_argument("--choice", choices=["decay", "sparse-random"], default="decay",
                        help="vector choice for ex2")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mm", type=_csv_list(), default=None, metavar="A,B,C",
                        help="MatrixMarket files for --problem mm")
    common.add_argument("--s-strategy", choices=list(SChoice.KINDS[:3]), default="identity")
    common.add_argument("--s-scale", type=float, default=1.0, help="multiply S by this factor")
    common.add_argument("--desk-cap", type=int, default=QR_EIGEN_CAP)

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--precond", type=_csv_list(), default=["PD", "P1", "P"],
                       help="comma-separated subset of none,PD,P1,P")
    solve.add_argument("--tol", type=float, default=1e-7)
    solve.add_argument("--maxit", type=int, default=5000)
    solve.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("solve", parents=[common, solve], help="run GMRES and print a table")
    sp.add_argument("--out", default=None)
    sp = sub.add_parser("table", parents=[common, solve], help="run GMRES and write a CSV table")
    sp.add_argument("--out", default=None)
    sp = sub.add_parser("spectrum", parents=[common], help="write eigenvalue CSVs")
    sp.add_argument("--operators", type=_csv_list(), default=list(WHICH),
                    help="comma-separated subset of raw,PD,P1,P")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--precision", choices=["auto", "double", "extended"], default="auto",
                    help="arithmetic for the dense eigensolver (auto: long double up to "
                         "400 unknowns)")
    sub.add_parser("verify", parents=[common], help="run the certification suite")
    return ap


def config_from_args(ns) -> RunConfig:
    kw = {k: v for k, v in vars(ns).items() if k != "command" and v is not None}
    return RunConfig(**kw)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        if ns.command == "solve":
            rows = cmd_solve(cfg)
            for r in rows:
                it = "-" if r.iters is None else r.iters
                err = "-" if r.err is None else f"{r.err:.2e}"
                line = (f"{r.precond:>4}  p={r.p:<4} dim={r.total_dim:<7} IT={it!s:<5} "
                        f"setup={r.setup_seconds:.3f}s solve={r.cpu_seconds:.3f}s Err={err}")
                print(line + (f"  ({r.error})" if r.error else ""))
            if cfg.out:
                write_table(rows, cfg.out)
            return 0
        if ns.command == "table":
            cmd_table(cfg)
            return 0
        if ns.command == "spectrum":
            for path in cmd_spectrum(cfg):
                print(path)
            return 0
        return cmd_verify(cfg)
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"saddlepc: error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
