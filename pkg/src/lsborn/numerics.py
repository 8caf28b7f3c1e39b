"""Dense complex linear algebra: LU with partial pivoting, Hessenberg/QR eigenvalues, Arnoldi.

Inner loops are compiled with numba; the public functions validate inputs and
translate failure codes into exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .errors import ConvergenceError, SingularMatrixError, ValidationError

EIGEN_CAP = 4096
DEFLATION_TOL = 1e-12
PIVOT_TOL = 1e-14


def _as_square(a) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return np.array(a, dtype=np.complex128, order="C")


# --------------------------------------------------------------------------- LU


@numba.njit(cache=True)
def _lu_inplace(a, piv, rownorm, tol):
    n = a.shape[0]
    for k in range(n):
        p = k
        best = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > best:
                best = v
                p = i
        piv[k] = p
        if p != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = tmp
            tmp_r = rownorm[k]
            rownorm[k] = rownorm[p]
            rownorm[p] = tmp_r
        if best <= tol * rownorm[k]:
            return k
        inv = 1.0 / a[k, k]
        for i in range(k + 1, n):
            a[i, k] *= inv
            lik = a[i, k]
            if lik != 0:
                for j in range(k + 1, n):
                    a[i, j] -= lik * a[k, j]
    return -1


def lu_factor(a) -> tuple[np.ndarray, np.ndarray]:
    """Factor ``P A = L U``; returns the packed factors and the LAPACK-style pivot rows.

    Raises
    ------
    SingularMatrixError
        When a pivot magnitude is at most ``1e-14`` times the norm of its row.
    """
    lu = _as_square(a)
    n = lu.shape[0]
    piv = np.zeros(n, dtype=np.int64)
    rownorm = np.abs(lu).max(axis=1) if n else np.zeros(0)
    rownorm = np.where(rownorm == 0.0, 1.0, rownorm)
    failed = _lu_inplace(lu, piv, rownorm, PIVOT_TOL)
    if failed >= 0:
        raise SingularMatrixError(f"matrix is singular to working precision (pivot {failed})")
    return lu, piv


def lu_unpack(lu: np.ndarray, piv: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(P, L, U)`` with ``P A = L U``."""
    n = lu.shape[0]
    perm = np.arange(n)
    for k, p in enumerate(piv):
        perm[[k, p]] = perm[[p, k]]
    P = np.eye(n)[perm]
    L = np.tril(lu, -1) + np.eye(n)
    U = np.triu(lu)
    return P, L, U


@numba.njit(cache=True)
def _lu_substitute(lu, piv, b):
    n = lu.shape[0]
    x = b.copy()
    for k in range(n):
        p = piv[k]
        if p != k:
            tmp = x[k]
            x[k] = x[p]
            x[p] = tmp
    for i in range(n):
        acc = x[i]
        for j in range(i):
            acc -= lu[i, j] * x[j]
        x[i] = acc
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for j in range(i + 1, n):
            acc -= lu[i, j] * x[j]
        x[i] = acc / lu[i, i]
    return x


def lu_solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` by LU with partial pivoting."""
    lu, piv = lu_factor(a)
    b = np.asarray(b, dtype=np.complex128)
    if b.shape != (lu.shape[0],):
        raise ValidationError(f"right-hand side has shape {b.shape}, expected ({lu.shape[0]},)")
    return _lu_substitute(lu, piv, b)


# --------------------------------------------------------------------------- eigenvalues


@numba.njit(cache=True)
def _hessenberg_inplace(h):
    n = h.shape[0]
    v = np.zeros(n, dtype=np.complex128)
    w = np.zeros(n, dtype=np.complex128)
    for k in range(n - 2):
        alpha = 0.0
        for i in range(k + 1, n):
            alpha += h[i, k].real ** 2 + h[i, k].imag ** 2
        alpha = np.sqrt(alpha)
        if alpha == 0.0:
            continue
        x0 = h[k + 1, k]
        phase = x0 / abs(x0) if abs(x0) > 0.0 else 1.0 + 0j
        for i in range(k + 1, n):
            v[i] = h[i, k]
        v[k + 1] += phase * alpha
        vn = 0.0
        for i in range(k + 1, n):
            vn += v[i].real ** 2 + v[i].imag ** 2
        scale = 1.0 / np.sqrt(vn)
        for i in range(k + 1, n):
            v[i] *= scale
        for j in range(k, n):
            w[j] = 0.0
        for i in range(k + 1, n):
            vc = np.conj(v[i])
            for j in range(k, n):
                w[j] += vc * h[i, j]
        for i in range(k + 1, n):
            vi = 2.0 * v[i]
            for j in range(k, n):
                h[i, j] -= vi * w[j]
        for i in range(n):
            acc = 0.0 + 0j
            for j in range(k + 1, n):
                acc += h[i, j] * v[j]
            acc *= 2.0
            for j in range(k + 1, n):
                h[i, j] -= acc * np.conj(v[j])
        for i in range(k + 2, n):
            h[i, k] = 0.0


@numba.njit(cache=True)
def _hessenberg_qr(h, tol, max_sweeps):
    # Single-shift implicit QR restricted to the active window: eigenvalues only.
    n = h.shape[0]
    eig = np.zeros(n, dtype=np.complex128)
    norm = 0.0
    for i in range(n):
        for j in range(max(0, i - 1), n):
            norm = max(norm, abs(h[i, j]))
    floor = 2.220446049250313e-16 * norm
    hi = n - 1
    its = 0
    sweeps = 0
    while hi >= 0:
        lo = hi
        while lo > 0:
            sub = abs(h[lo, lo - 1])
            if sub <= tol * (abs(h[lo, lo]) + abs(h[lo - 1, lo - 1])) or sub <= floor:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eig[hi] = h[hi, hi]
            hi -= 1
            its = 0
            continue
        its += 1
        sweeps += 1
        if sweeps > max_sweeps:
            return eig, hi + 1
        if its % 11 == 0:
            shift = h[hi, hi] + 0.75 * abs(h[hi, hi - 1])
        else:
            a = h[hi - 1, hi - 1]
            b = h[hi - 1, hi]
            c = h[hi, hi - 1]
            d = h[hi, hi]
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            den = half + disc if abs(half + disc) >= abs(half - disc) else half - disc
            shift = d - (b * c) / den if abs(den) > 0.0 else d
        x = h[lo, lo] - shift
        y = h[lo + 1, lo]
        for k in range(lo, hi):
            if k > lo:
                x = h[k, k - 1]
                y = h[k + 1, k - 1]
            ax = abs(x)
            nrm = np.sqrt(ax * ax + abs(y) ** 2)
            if nrm == 0.0:
                continue
            if ax == 0.0:
                c = 0.0
                s = 1.0 + 0j
            else:
                c = ax / nrm
                s = (x / ax) * np.conj(y) / nrm
            jstart = k - 1 if k > lo else lo
            for j in range(jstart, hi + 1):
                h1 = h[k, j]
                h2 = h[k + 1, j]
                h[k, j] = c * h1 + s * h2
                h[k + 1, j] = -np.conj(s) * h1 + c * h2
            iend = min(k + 2, hi)
            for i in range(lo, iend + 1):
                a1 = h[i, k]
                b1 = h[i, k + 1]
                h[i, k] = a1 * c + b1 * np.conj(s)
                h[i, k + 1] = -a1 * s + b1 * c
            if k > lo:
                h[k + 1, k - 1] = 0.0
    return eig, 0


def hessenberg(a) -> np.ndarray:
    """Unitary reduction to upper Hessenberg form by Householder reflections."""
    h = _as_square(a)
    if h.shape[0] > 2:
        _hessenberg_inplace(h)
    return h


def eigenvalues_dense(a, cap: int = EIGEN_CAP) -> np.ndarray:
    """All eigenvalues of a dense complex matrix (Hessenberg reduction + shifted QR).

    Raises
    ------
    ConvergenceError
        If the QR iteration needs more than ``100 n`` sweeps.
    """
    h = _as_square(a)
    n = h.shape[0]
    if n > cap:
        raise ValidationError(f"matrix size {n} exceeds eigensolver cap {cap}")
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n > 2:
        _hessenberg_inplace(h)
    eig, failed = _hessenberg_qr(h, DEFLATION_TOL, 100 * n)
    if failed:
        raise ConvergenceError(f"QR iteration did not deflate {failed} eigenvalues within {100 * n} sweeps")
    return eig


# --------------------------------------------------------------------------- Arnoldi


@dataclass(frozen=True)
class KrylovProjection:
    """Orthonormal Krylov basis ``basis`` (n x m) and projected operator ``hessenberg`` (m x m).

    ``A @ basis = basis @ hessenberg + residual_norm * outer(next_vector, e_m)``;
    ``breakdown`` means the Krylov space is invariant and ``residual_norm`` is zero.
    """

    basis: np.ndarray
    hessenberg: np.ndarray
    residual_norm: float
    next_vector: np.ndarray
    breakdown: bool

    @property
    def m(self) -> int:
        return self.hessenberg.shape[0]


def arnoldi(apply: Callable[[np.ndarray], np.ndarray], start, m: int, breakdown_tol: float = 1e-12) -> KrylovProjection:
    """Modified Gram-Schmidt Arnoldi with one reorthogonalization pass.

    Stops early when the orthogonalized vector is smaller than ``breakdown_tol``
    times the norm of ``A v_j`` (the Krylov space is then numerically invariant).
    """
    start = np.asarray(start, dtype=np.complex128)
    n = start.size
    beta = np.linalg.norm(start)
    if beta == 0.0 or not np.isfinite(beta):
        raise ValidationError("Arnoldi start vector must be nonzero and finite")
    if m < 1:
        raise ValidationError("Krylov dimension must be >= 1")
    m = min(m, n)
    Q = np.zeros((n, m + 1), dtype=np.complex128)
    H = np.zeros((m + 1, m), dtype=np.complex128)
    Q[:, 0] = start / beta
    for j in range(m):
        w = np.asarray(apply(Q[:, j]), dtype=np.complex128)
        wnorm = np.linalg.norm(w)
        for _ in range(2):
            for i in range(j + 1):
                c = np.vdot(Q[:, i], w)
                H[i, j] += c
                w = w - c * Q[:, i]
        h = np.linalg.norm(w)
        if h <= breakdown_tol * wnorm or wnorm == 0.0:
            return KrylovProjection(Q[:, : j + 1], H[: j + 1, : j + 1], 0.0, np.zeros(n, complex), True)
        H[j + 1, j] = h
        Q[:, j + 1] = w / h
    return KrylovProjection(Q[:, :m], H[:m, :m], float(H[m, m - 1].real), Q[:, m], False)
