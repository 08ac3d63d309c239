"""Desk-scale dense factorizations and eigensolvers.

Dense matrices are plain 2-D ``numpy`` arrays.  Eigenvalue lists are
complex ``numpy`` arrays whose non-real members come in conjugate pairs.
"""
from __future__ import annotations

import numba
import numpy as np

__all__ = [
    "NotPositiveDefiniteError",
    "SingularMatrixError",
    "ConvergenceError",
    "check_symmetric",
    "chol",
    "chol_solve",
    "lu_solve",
    "householder_qr",
    "nullspace_basis",
    "sym_eigen",
    "qr_eigen",
    "dense_image",
]

SYMMETRY_TOL = 1e-12
QR_EIGEN_CAP = 2500


_EPS = np.finfo(np.float64).eps


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, pivot, value=None, what="matrix"):
        self.pivot = pivot
        msg = f"{what} is not positive definite (pivot {pivot}"
        if value is not None:
            msg += f", value {value:.3e}"
        super().__init__(msg + ")")


class SingularMatrixError(np.linalg.LinAlgError):
    pass


class ConvergenceError(RuntimeError):
    pass


def check_symmetric(a, tol=SYMMETRY_TOL, what="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be square, got shape {a.shape}")
    scale = np.abs(a).max() if a.size else 0.0
    if scale and np.abs(a - a.T).max() > tol * scale:
        raise ValueError(f"{what} is not symmetric to {tol:g} relative")
    return a


def chol(a) -> np.ndarray:
    """Lower-triangular Cholesky factor ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefiniteError
        With the index of the first nonpositive pivot.
    """
    a = check_symmetric(a)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if not d > 4.0 * n * _EPS * a[j, j]:
            raise NotPositiveDefiniteError(j, d)
        ljj = np.sqrt(d)
        L[j, j] = ljj
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / ljj
    return L


@numba.njit(cache=True)
def _lower_solve(L, b):
    n = L.shape[0]
    x = b.copy()
    for i in range(n):
        acc = x[i]
        for k in range(i):
            acc -= L[i, k] * x[k]
        x[i] = acc / L[i, i]
    return x


@numba.njit(cache=True)
def _lower_t_solve(L, b):
    n = L.shape[0]
    x = b.copy()
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for k in range(i + 1, n):
            acc -= L[k, i] * x[k]
        x[i] = acc / L[i, i]
    return x


def chol_solve(L, b) -> np.ndarray:
    """Solve ``L L^T x = b`` by forward then backward substitution.

    ``b`` may be a vector or a 2-D array of right-hand sides (columns).
    """
    L = np.ascontiguousarray(L, dtype=np.float64)
    if np.any(np.diag(L) == 0.0):
        raise SingularMatrixError("Cholesky factor has a zero diagonal entry")
    b = np.asarray(b, dtype=np.float64)
    if b.ndim == 2:
        return np.column_stack([chol_solve(L, b[:, j]) for j in range(b.shape[1])]) \
            if b.shape[1] else np.zeros_like(b)
    return _lower_t_solve(L, _lower_solve(L, np.ascontiguousarray(b)))


def lu_solve(a, b, dtype=np.float64) -> np.ndarray:
    """Solve ``a x = b`` by LU with partial pivoting (used as a test oracle).

    ``dtype=np.longdouble`` runs the elimination in extended precision.
    """
    a = np.array(a, dtype=dtype)
    b = np.array(b, dtype=dtype)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("lu_solve needs a square matrix")
    if b.shape[0] != n:
        raise ValueError("right-hand side length does not match matrix")
    scale = np.abs(a).max() if n else 0.0
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) <= 1e-300 or abs(a[piv, k]) <= np.finfo(dtype).eps * scale * 1e-3:
            raise SingularMatrixError(f"matrix is singular (pivot column {k})")
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            b[[k, piv]] = b[[piv, k]]
        m = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(m, a[k, k:])
        b[k + 1:] -= np.multiply.outer(m, b[k])
    x = b
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def _house(x):
    """Householder vector ``v`` (``v[0] == 1``) and ``beta`` with ``(I - beta v v^T) x = ±||x|| e1``."""
    v = x.astype(np.result_type(x.dtype, np.float64), copy=True)
    sigma = v[1:] @ v[1:]
    if sigma == 0.0:
        v[0] = 1.0
        beta = 0.0 if x[0] >= 0 else 2.0
        return v, beta
    mu = np.sqrt(x[0] ** 2 + sigma)
    v0 = x[0] - mu if x[0] <= 0 else -sigma / (x[0] + mu)
    beta = 2.0 * v0 ** 2 / (sigma + v0 ** 2)
    v /= v0
    v[0] = 1.0
    return v, beta


def householder_qr(a, full=True):
    """Householder QR of an ``m x n`` matrix with ``m >= n``.

    Returns ``Q`` (``m x m`` when ``full``, else ``m x n``) and ``R``
    (matching shape, upper triangular).
    """
    a = np.array(a, dtype=np.float64)
    m, n = a.shape
    if m < n:
        raise ValueError("householder_qr needs nrows >= ncols")
    R = a
    Q = np.eye(m)
    for k in range(min(n, m - 1)):
        v, beta = _house(R[k:, k])
        if beta == 0.0:
            continue
        R[k:, k:] -= beta * np.outer(v, v @ R[k:, k:])
        R[k + 1:, k] = 0.0
        Q[:, k:] -= beta * np.outer(Q[:, k:] @ v, v)
    if full:
        return Q, np.triu(R)
    return Q[:, :n], np.triu(R[:n])


def nullspace_basis(c) -> np.ndarray:
    """Orthonormal basis of ``null(c)`` for a full-row-rank ``l x m`` matrix.

    The columns are the trailing ``m - l`` columns of the full ``Q`` from
    the QR factorization of ``c.T``.
    """
    from .sparse import SparseMat

    cd = c.toarray() if isinstance(c, SparseMat) else np.asarray(c, dtype=np.float64)
    l, m = cd.shape
    if l > m:
        raise ValueError("nullspace_basis needs l <= m")
    Q, R = householder_qr(cd.T)
    fro = np.linalg.norm(cd)
    rdiag = np.abs(np.diag(R[:l, :l]))
    if l and (rdiag.min() < 1e-12 * fro):
        raise np.linalg.LinAlgError(
            f"matrix is rank deficient (|R[{int(rdiag.argmin())}]| = {rdiag.min():.3e})")
    return Q[:, l:].copy()


@numba.njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    n = a.shape[0]
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j] * a[i, j]
    fro = np.sqrt(fro)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if np.sqrt(off) <= tol * fro:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(v.shape[0]):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return -1


def sym_eigen(a, tol=1e-12, max_sweeps=100, vectors=False):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi, ascending.

    With ``vectors=True`` also returns the matrix whose columns are the
    matching orthonormal eigenvectors.
    """
    a = check_symmetric(a).copy()
    n = a.shape[0]
    if n == 0:
        return (np.zeros(0), np.zeros((0, 0))) if vectors else np.zeros(0)
    a = 0.5 * (a + a.T)
    v = np.eye(n) if vectors else np.zeros((0, n))
    sweeps = _jacobi_sweeps(a, v, tol, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a)
    order = np.argsort(w, kind="stable")
    if vectors:
        return w[order], v[:, order]
    return w[order]


def dense_image(op, n, ncols=None) -> np.ndarray:
    """Dense matrix of a linear map, built by applying it to unit vectors."""
    ncols = n if ncols is None else ncols
    out = np.empty((n, ncols))
    e = np.zeros(ncols)
    for j in range(ncols):
        e[j] = 1.0
        out[:, j] = op(e)
        e[j] = 0.0
    return out


# --- nonsymmetric eigenvalues ------------------------------------------------

@numba.njit(cache=True)
def _balance(a):
    # Parlett-Reinsch diagonal scaling by powers of two; similarity is exact.
    n = a.shape[0]
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            r = 0.0
            c = 0.0
            for j in range(n):
                if j != i:
                    c += abs(a[j, i])
                    r += abs(a[i, j])
            if c != 0.0 and r != 0.0:
                g = r / radix
                f = 1.0
                s = c + r
                while c < g:
                    f *= radix
                    c *= sqrdx
                g = r * radix
                while c > g:
                    f /= radix
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    done = False
                    g = 1.0 / f
                    for j in range(n):
                        a[i, j] *= g
                    for j in range(n):
                        a[j, i] *= f


def _hessenberg(a):
    """Householder reduction to upper Hessenberg form (in place)."""
    n = a.shape[0]
    for k in range(n - 2):
        v, beta = _house(a[k + 1:, k])
        if beta == 0.0:
            continue
        a[k + 1:, k:] -= beta * np.outer(v, v @ a[k + 1:, k:])
        a[:, k + 1:] -= beta * np.outer(a[:, k + 1:] @ v, v)
        a[k + 2:, k] = 0.0
    return a


@numba.njit(cache=True)
def _sign(a, b):
    return abs(a) if b >= 0 else -abs(a)


@numba.njit(cache=True)
def _eig2x2(a, b, c, d):
    # Standardised 2x2 eigenvalues (after LAPACK's dlanv2).
    eps = 2.220446049250313e-16
    if c == 0.0:
        return a, 0.0, d, 0.0
    if b == 0.0:
        return d, 0.0, a, 0.0
    if (a - d) == 0.0 and _sign(1.0, b) != _sign(1.0, c):
        im = np.sqrt(abs(b)) * np.sqrt(abs(c))
        return a, im, d, -im
    temp = a - d
    p = 0.5 * temp
    bcmax = max(abs(b), abs(c))
    bcmis = min(abs(b), abs(c)) * _sign(1.0, b) * _sign(1.0, c)
    scale = max(abs(p), bcmax)
    z = p / scale * p + bcmax / scale * bcmis
    if z >= 4.0 * eps:
        z = p + _sign(np.sqrt(scale) * np.sqrt(z), p)
        a = d + z
        d = d - bcmax / z * bcmis
        return a, 0.0, d, 0.0
    sigma = b + c
    tau = np.hypot(sigma, temp)
    cs = np.sqrt(0.5 * (1.0 + abs(sigma) / tau))
    sn = -(p / (tau * cs)) * _sign(1.0, sigma)
    aa = a * cs + b * sn
    bb = -a * sn + b * cs
    cc = c * cs + d * sn
    dd = -c * sn + d * cs
    a = aa * cs + cc * sn
    b = bb * cs + dd * sn
    c = -aa * sn + cc * cs
    d = -bb * sn + dd * cs
    temp = 0.5 * (a + d)
    a = temp
    d = temp
    if c != 0.0:
        if b != 0.0:
            if _sign(1.0, b) == _sign(1.0, c):
                sab = np.sqrt(abs(b))
                sac = np.sqrt(abs(c))
                p = _sign(sab * sac, c)
                return a + p, 0.0, d - p, 0.0
            im = np.sqrt(abs(b)) * np.sqrt(abs(c))
            return a, im, d, -im
        return a, 0.0, d, 0.0
    return a, 0.0, d, 0.0


@numba.njit(cache=True)
def _francis(h, wr, wi, ulp, maxit, exc_every):
    """Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.

    Returns -1 on success, otherwise the index of the trailing row of the
    block that failed to deflate.
    """
    n = h.shape[0]
    smlnum = 2.2250738585072014e-308 * (n / ulp)
    v = np.zeros(3)
    budget = maxit * n
    i = n - 1
    while i >= 0:
        l = 0
        converged = False
        its = -1
        while True:
            its += 1
            # locate a negligible subdiagonal entry
            k = i
            while k > l:
                if abs(h[k, k - 1]) <= smlnum:
                    break
                tst = abs(h[k - 1, k - 1]) + abs(h[k, k])
                if tst == 0.0:
                    if k - 2 >= l:
                        tst += abs(h[k - 1, k - 2])
                    if k + 1 <= i:
                        tst += abs(h[k + 1, k])
                if abs(h[k, k - 1]) <= ulp * tst:
                    ab = max(abs(h[k, k - 1]), abs(h[k - 1, k]))
                    ba = min(abs(h[k, k - 1]), abs(h[k - 1, k]))
                    aa = max(abs(h[k, k]), abs(h[k - 1, k - 1] - h[k, k]))
                    bb = min(abs(h[k, k]), abs(h[k - 1, k - 1] - h[k, k]))
                    s = aa + ab
                    if ba * (ab / s) <= max(smlnum, ulp * (bb * (aa / s))):
                        break
                k -= 1
            l = k
            if l > 0:
                h[l, l - 1] = 0.0
            if l >= i - 1:
                converged = True
                break
            if budget == 0:
                break
            budget -= 1

            if its > 0 and its % exc_every == 0:
                if (its // exc_every) % 2 == 1:
                    s = abs(h[l + 1, l]) + abs(h[l + 2, l + 1])
                    h11 = 0.75 * s + h[l, l]
                else:
                    s = abs(h[i, i - 1]) + abs(h[i - 1, i - 2])
                    h11 = 0.75 * s + h[i, i]
                h12 = -0.4375 * s
                h21 = s
                h22 = h11
            else:
                h11 = h[i - 1, i - 1]
                h21 = h[i, i - 1]
                h12 = h[i - 1, i]
                h22 = h[i, i]
            s = abs(h11) + abs(h12) + abs(h21) + abs(h22)
            if s == 0.0:
                rt1r = 0.0
                rt1i = 0.0
                rt2r = 0.0
                rt2i = 0.0
            else:
                h11 /= s
                h21 /= s
                h12 /= s
                h22 /= s
                tr = (h11 + h22) / 2.0
                det = (h11 - tr) * (h22 - tr) - h12 * h21
                rtdisc = np.sqrt(abs(det))
                if det >= 0.0:
                    rt1r = tr * s
                    rt2r = rt1r
                    rt1i = rtdisc * s
                    rt2i = -rt1i
                else:
                    rt1r = tr + rtdisc
                    rt2r = tr - rtdisc
                    if abs(rt1r - h22) <= abs(rt2r - h22):
                        rt1r *= s
                        rt2r = rt1r
                    else:
                        rt2r *= s
                        rt1r = rt2r
                    rt1i = 0.0
                    rt2i = 0.0

            # look for two consecutive small subdiagonals
            m = i - 2
            while True:
                h21s = h[m + 1, m]
                s = abs(h[m, m] - rt2r) + abs(rt2i) + abs(h21s)
                h21s = h[m + 1, m] / s
                v[0] = h21s * h[m, m + 1] + (h[m, m] - rt1r) * ((h[m, m] - rt2r) / s) - rt1i * (rt2i / s)
                v[1] = h21s * (h[m, m] + h[m + 1, m + 1] - rt1r - rt2r)
                v[2] = h21s * h[m + 2, m + 1]
                s = abs(v[0]) + abs(v[1]) + abs(v[2])
                v[0] /= s
                v[1] /= s
                v[2] /= s
                if m == l:
                    break
                h00 = abs(h[m, m - 1]) * (abs(v[1]) + abs(v[2]))
                h11b = abs(v[0]) * (abs(h[m - 1, m - 1]) + abs(h[m, m]) + abs(h[m + 1, m + 1]))
                if h00 <= ulp * h11b:
                    break
                m -= 1

            # bulge chase
            for k in range(m, i):
                nr = min(3, i - k + 1)
                if k > m:
                    for r in range(nr):
                        v[r] = h[k + r, k - 1]
                alpha = v[0]
                xnorm = 0.0
                for r in range(1, nr):
                    xnorm += v[r] * v[r]
                xnorm = np.sqrt(xnorm)
                if xnorm == 0.0:
                    t1 = 0.0
                else:
                    beta = -_sign(np.hypot(alpha, xnorm), alpha)
                    t1 = (beta - alpha) / beta
                    scl = 1.0 / (alpha - beta)
                    for r in range(1, nr):
                        v[r] *= scl
                    alpha = beta
                v[0] = alpha
                if k > m:
                    h[k, k - 1] = v[0]
                    h[k + 1, k - 1] = 0.0
                    if k < i - 1:
                        h[k + 2, k - 1] = 0.0
                elif m > l:
                    h[k, k - 1] *= (1.0 - t1)
                v2 = v[1]
                t2 = t1 * v2
                if nr == 3:
                    v3 = v[2]
                    t3 = t1 * v3
                    for j in range(k, i + 1):
                        sm = h[k, j] + v2 * h[k + 1, j] + v3 * h[k + 2, j]
                        h[k, j] -= sm * t1
                        h[k + 1, j] -= sm * t2
                        h[k + 2, j] -= sm * t3
                    for j in range(l, min(k + 3, i) + 1):
                        sm = h[j, k] + v2 * h[j, k + 1] + v3 * h[j, k + 2]
                        h[j, k] -= sm * t1
                        h[j, k + 1] -= sm * t2
                        h[j, k + 2] -= sm * t3
                elif nr == 2:
                    for j in range(k, i + 1):
                        sm = h[k, j] + v2 * h[k + 1, j]
                        h[k, j] -= sm * t1
                        h[k + 1, j] -= sm * t2
                    for j in range(l, i + 1):
                        sm = h[j, k] + v2 * h[j, k + 1]
                        h[j, k] -= sm * t1
                        h[j, k + 1] -= sm * t2

        if not converged:
            return i
        if l == i:
            wr[i] = h[i, i]
            wi[i] = 0.0
        else:
            a, b, c, d = h[i - 1, i - 1], h[i - 1, i], h[i, i - 1], h[i, i]
            r1, i1, r2, i2 = _eig2x2(a, b, c, d)
            wr[i - 1] = r1
            wi[i - 1] = i1
            wr[i] = r2
            wi[i] = i2
        i = l - 1
    return -1


# Extended-precision variants.  numba has no long double, so these run as
# vectorized numpy; they are used for small matrices whose defective
# eigenvalues need more than double precision to resolve.

def _balance_generic(a):
    n = a.shape[0]
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.abs(a[:, i]).sum() - abs(a[i, i])
            r = np.abs(a[i, :]).sum() - abs(a[i, i])
            if c == 0 or r == 0:
                continue
            s = c + r
            f = 1.0
            g = r / 2
            while c < g:
                f *= 2.0
                c *= 4
            g = r * 2
            while c > g:
                f /= 2.0
                c /= 4
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f


def _eig2x2_generic(a, b, c, d):
    if c == 0:
        return a, 0, d, 0
    if b == 0:
        return d, 0, a, 0
    p = (a - d) / 2
    bc = b * c
    scale = max(abs(p), np.sqrt(abs(bc)))
    disc = (p / scale) ** 2 + bc / scale / scale
    mid = (a + d) / 2
    if disc >= 0:
        root = scale * np.sqrt(disc)
        z = p + (root if p >= 0 else -root)
        if z == 0:
            return mid, 0, mid, 0
        r1 = d + z
        return r1, 0, d - bc / z, 0
    im = scale * np.sqrt(-disc)
    return mid, im, mid, -im


def _francis_generic(h, ulp, maxit, exc_every):
    """Same iteration as :func:`_francis` with the sweeps vectorized.

    Returns ``(wr, wi, stuck)`` with ``stuck == -1`` on success.
    """
    n = h.shape[0]
    dt = h.dtype
    smlnum = np.finfo(dt).tiny * (n / ulp)
    wr = np.zeros(n, dtype=dt)
    wi = np.zeros(n, dtype=dt)
    v = np.zeros(3, dtype=dt)
    budget = maxit * n
    i = n - 1
    while i >= 0:
        l = 0
        converged = False
        its = -1
        while True:
            its += 1
            k = i
            while k > l:
                if abs(h[k, k - 1]) <= smlnum:
                    break
                tst = abs(h[k - 1, k - 1]) + abs(h[k, k])
                if tst == 0:
                    if k - 2 >= l:
                        tst += abs(h[k - 1, k - 2])
                    if k + 1 <= i:
                        tst += abs(h[k + 1, k])
                if abs(h[k, k - 1]) <= ulp * tst:
                    ab = max(abs(h[k, k - 1]), abs(h[k - 1, k]))
                    ba = min(abs(h[k, k - 1]), abs(h[k - 1, k]))
                    aa = max(abs(h[k, k]), abs(h[k - 1, k - 1] - h[k, k]))
                    bb = min(abs(h[k, k]), abs(h[k - 1, k - 1] - h[k, k]))
                    s = aa + ab
                    if ba * (ab / s) <= max(smlnum, ulp * (bb * (aa / s))):
                        break
                k -= 1
            l = k
            if l > 0:
                h[l, l - 1] = 0
            if l >= i - 1:
                converged = True
                break
            if budget == 0:
                break
            budget -= 1

            if its > 0 and its % exc_every == 0:
                if (its // exc_every) % 2 == 1:
                    s = abs(h[l + 1, l]) + abs(h[l + 2, l + 1])
                    h11 = 0.75 * s + h[l, l]
                else:
                    s = abs(h[i, i - 1]) + abs(h[i - 1, i - 2])
                    h11 = 0.75 * s + h[i, i]
                h12, h21, h22 = -0.4375 * s, s, h11
            else:
                h11, h21, h12, h22 = h[i - 1, i - 1], h[i, i - 1], h[i - 1, i], h[i, i]
            s = abs(h11) + abs(h12) + abs(h21) + abs(h22)
            if s == 0:
                rt1r = rt1i = rt2r = rt2i = dt.type(0)
            else:
                h11, h21, h12, h22 = h11 / s, h21 / s, h12 / s, h22 / s
                tr = (h11 + h22) / 2
                det = (h11 - tr) * (h22 - tr) - h12 * h21
                rtdisc = np.sqrt(abs(det))
                if det >= 0:
                    rt1r = rt2r = tr * s
                    rt1i = rtdisc * s
                    rt2i = -rt1i
                else:
                    rt1r = tr + rtdisc
                    rt2r = tr - rtdisc
                    if abs(rt1r - h22) <= abs(rt2r - h22):
                        rt1r = rt2r = rt1r * s
                    else:
                        rt1r = rt2r = rt2r * s
                    rt1i = rt2i = dt.type(0)

            m = i - 2
            while True:
                s = abs(h[m, m] - rt2r) + abs(rt2i) + abs(h[m + 1, m])
                h21s = h[m + 1, m] / s
                v[0] = h21s * h[m, m + 1] + (h[m, m] - rt1r) * ((h[m, m] - rt2r) / s) - rt1i * (rt2i / s)
                v[1] = h21s * (h[m, m] + h[m + 1, m + 1] - rt1r - rt2r)
                v[2] = h21s * h[m + 2, m + 1]
                v /= np.abs(v).sum()
                if m == l:
                    break
                h00 = abs(h[m, m - 1]) * (abs(v[1]) + abs(v[2]))
                h11b = abs(v[0]) * (abs(h[m - 1, m - 1]) + abs(h[m, m]) + abs(h[m + 1, m + 1]))
                if h00 <= ulp * h11b:
                    break
                m -= 1

            for k in range(m, i):
                nr = min(3, i - k + 1)
                if k > m:
                    v[:nr] = h[k:k + nr, k - 1]
                alpha = v[0]
                xnorm = np.sqrt(v[1:nr] @ v[1:nr])
                if xnorm == 0:
                    t1 = dt.type(0)
                else:
                    beta = -np.copysign(np.hypot(alpha, xnorm), alpha)
                    t1 = (beta - alpha) / beta
                    v[1:nr] /= alpha - beta
                    alpha = beta
                v[0] = alpha
                if k > m:
                    h[k, k - 1] = v[0]
                    h[k + 1:k + nr, k - 1] = 0
                elif m > l:
                    h[k, k - 1] *= 1 - t1
                u = np.ones(nr, dtype=dt)
                u[1:] = v[1:nr]
                rows = h[k:k + nr, k:i + 1]
                rows -= np.outer(t1 * u, u @ rows)
                top = min(k + 3, i) if nr == 3 else i
                cols = h[l:top + 1, k:k + nr]
                cols -= np.outer(cols @ u, t1 * u)

        if not converged:
            return wr, wi, i
        if l == i:
            wr[i], wi[i] = h[i, i], 0
        else:
            wr[i - 1], wi[i - 1], wr[i], wi[i] = _eig2x2_generic(
                h[i - 1, i - 1], h[i - 1, i], h[i, i - 1], h[i, i])
        i = l - 1
    return wr, wi, -1


def qr_eigen(a, tol=None, maxit=50, *, exceptional_every=10,
             balance=True, cap=QR_EIGEN_CAP, precision="double") -> np.ndarray:
    """All eigenvalues of a real square matrix.

    Balances, reduces to Hessenberg form with Householder reflections and
    runs Francis double-shift QR with deflation.

    Parameters
    ----------
    tol : float, optional
        Relative threshold for treating a subdiagonal entry as zero.
        Defaults to the unit roundoff of the working precision.
    maxit : int
        QR sweeps allowed per eigenvalue, pooled over the whole matrix as
        in LAPACK's ``dlahqr``: the iteration fails once ``maxit * n``
        sweeps have been spent.
    exceptional_every : int
        Use an exceptional shift after this many sweeps without deflation.
    cap : int
        Largest accepted dimension.
    precision : {"double", "extended"}
        ``extended`` works in ``np.longdouble``.  It is much slower and
        meant for small matrices with defective eigenvalues, whose computed
        values scatter like the square root of the unit roundoff.

    Returns
    -------
    complex ndarray
        Eigenvalues; complex ones appear as exact conjugate pairs.
    """
    if precision not in ("double", "extended"):
        raise ValueError("precision must be 'double' or 'extended'")
    dt = np.float64 if precision == "double" else np.longdouble
    a = np.array(a, dtype=dt)
    if tol is None:
        tol = float(np.finfo(dt).eps)
    n = a.shape[0]
    if a.ndim != 2 or a.shape != (n, n):
        raise ValueError("qr_eigen needs a square matrix")
    if n > cap:
        raise ValueError(f"dimension {n} exceeds the dense eigensolver cap {cap}")
    if n == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if precision == "extended":
        if balance:
            _balance_generic(a)
        h = _hessenberg(a)
        wr, wi, stuck = _francis_generic(h, dt(tol), maxit, exceptional_every)
    else:
        if balance:
            _balance(a)
        h = np.ascontiguousarray(_hessenberg(a))
        wr = np.zeros(n)
        wi = np.zeros(n)
        stuck = _francis(h, wr, wi, tol, maxit, exceptional_every)
    if stuck >= 0:
        raise ConvergenceError(
            f"QR iteration did not deflate the block ending at row {stuck} within "
            f"{maxit} sweeps per eigenvalue")
    ev = wr.astype(np.float64) + 1j * wi.astype(np.float64)
    # pair conjugates exactly
    for k in range(n - 1):
        if wi[k] > 0 and wi[k + 1] < 0:
            ev[k + 1] = np.conj(ev[k])
    return ev
