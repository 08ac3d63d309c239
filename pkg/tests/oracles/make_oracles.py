"""Regenerate ``frozen.json`` from an independent scipy/LAPACK implementation.

Not collected by pytest.  Run ``python tests/oracles/make_oracles.py`` after
installing the ``oracle`` extra; the test suite only reads the frozen file.
"""
import json
import os

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

HERE = os.path.dirname(os.path.abspath(__file__))


def ex1(p):
    h = 1.0 / (p + 1)
    I = sp.identity(p)
    T = sp.diags([-1, 2, -1], [-1, 0, 1], shape=(p, p)) / h**2
    F = sp.diags([1, -1], [0, 1], shape=(p, p)) / h
    L = sp.kron(I, T) + sp.kron(T, I)
    A = sp.block_diag([L, L])
    B = sp.hstack([sp.kron(I, F), sp.kron(F, I)])
    E = sp.diags(np.arange(p) * p + 1.0)
    C = sp.kron(E, F)
    return A.toarray(), B.toarray(), C.toarray()


def ex2(p, v=None):
    pt, ph = p * p, p * (p + 1)
    if v is None:
        i = np.arange(1, ph + 1)
        v = np.exp(-2 * (i / 3) ** 2)
    W = np.outer(v, v)
    j = np.arange(1, 2 * pt + 1)
    D2 = np.diag(np.where(j <= pt, 1.0, 1e-5 * (j - pt) ** 2))
    D3 = np.diag(1e-5 * (j + pt) ** 2)
    A = sla.block_diag(2 * W.T @ W + np.eye(ph), D2, D3)
    Eh = np.zeros((p, p + 1))
    Eh[np.arange(p), np.arange(p)] = 2
    Eh[np.arange(p), np.arange(p) + 1] = -1
    E = np.vstack([np.kron(Eh, np.eye(p)), np.kron(np.eye(p), Eh)])
    B = np.hstack([E, -np.eye(2 * pt), np.eye(2 * pt)])
    C = E.T
    return A, B, C


def skew(A, B, C):
    n, m, l = A.shape[0], B.shape[0], C.shape[0]
    K = np.zeros((n + m + l,) * 2)
    K[:n, :n] = A
    K[:n, n:n + m] = B.T
    K[n:n + m, :n] = -B
    K[n:n + m, n + m:] = -C.T
    K[n + m:, n:n + m] = C
    return K


def P_mat(A, B, C, S):
    n, m, l = A.shape[0], B.shape[0], C.shape[0]
    P = np.zeros((n + m + l,) * 2)
    P[:n, :n] = A
    P[:n, n:n + m] = B.T
    P[n:n + m, n:n + m] = S
    P[n:n + m, n + m:] = -C.T
    P[n + m:, n:n + m] = C
    return P


def summary(A, B, C):
    return {"dims": [A.shape[0], B.shape[0], C.shape[0]],
            "fro": [float(np.linalg.norm(X)) for X in (A, B, C)],
            "sum": [float(X.sum()) for X in (A, B, C)],
            "nnz": [int(np.count_nonzero(X)) for X in (A, B, C)]}


def spectra(A, B, C, S):
    K = skew(A, B, C)
    H = np.linalg.solve(P_mat(A, B, C, S), K)
    ev = np.linalg.eigvals(H)
    schur = B @ np.linalg.solve(A, B.T)
    ks = np.linalg.eigvalsh(schur)
    ss = np.linalg.eigvalsh(S)
    nonunit = np.sort(ev[np.abs(ev - 1) > 1e-4].real)
    return {"nonunit": nonunit.tolist(),
            "interval": [float(ks[0] / ss[-1]), float(ks[-1] / ss[0])],
            "schur_eig_range": [float(ks[0]), float(ks[-1])],
            "trace": float(np.trace(H))}


def main():
    out = {}
    for p in (2, 3, 4):
        out[f"ex1_p{p}"] = summary(*ex1(p))
    for p in (2, 3, 4):
        out[f"ex2_p{p}"] = summary(*ex2(p))
    for name, (A, B, C) in {"ex1_p4": ex1(4), "ex2_p2": ex2(2), "ex2_p4": ex2(4)}.items():
        out[name]["spectrum_S_identity"] = spectra(A, B, C, np.eye(B.shape[0]))
        out[name]["norm_B"] = float(np.linalg.norm(B, 2))
        out[name]["lambda_min_A"] = float(np.linalg.eigvalsh(A)[0])
        schur = B @ np.linalg.solve(A, B.T)
        out[name]["theorem_lambda_min_S_identity"] = float(
            np.linalg.eigvalsh(2 * np.eye(B.shape[0]) - schur)[0])
    # kron hand example and small sparse sanity values
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    out["kron_example"] = np.kron(a, np.eye(2)).tolist()
    with open(os.path.join(HERE, "frozen.json"), "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
