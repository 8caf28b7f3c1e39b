"""Nyström discretization of the 1D Lippmann-Schwinger operator and its direct/FD solvers.

The operator acts on functions on ]0, L[ as

    V u(x) = (i k0 / 2) * integral_0^L exp(i k0 |x - y|) q(y) u(y) dy,

i.e. ``k0**2`` times the free-space Green's function ``(i / 2 k0) exp(i k0 |x - y|)``
folded into the kernel. The matrix is ``M[i, j] = (i k0 / 2) exp(i k0 |x_i - x_j|) q_j w_j``.

Because ``exp(i k0 |x - y|)`` factorizes on either side of the diagonal, products with
``M`` can also be formed in O(n) with two running sums; :meth:`LSOperator.fast_matvec`
does that and is what the long preconditioned iterations use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from . import numerics
from .errors import MediumError, NumericalError, SingularMatrixError, ValidationError
from .problem import Grid, Medium, TabulatedMedium, WaveProblem, check_support, make_grid, sample_medium


@numba.njit(cache=True)
def _separable_kernel(v, ep, em, cep, cem, out):
    # out_i = sum_j exp(i k |x_i - x_j|) c_j v_j
    n = v.shape[0]
    acc = 0j
    for i in range(n):
        acc += cem[i] * v[i]
        out[i] = ep[i] * acc
    acc = 0j
    for i in range(n - 1, -1, -1):
        out[i] += em[i] * acc
        acc += cep[i] * v[i]


@numba.njit(cache=True)
def _relaxed_block(v, s, ep, em, cep, cem, a, b, steps):
    # steps x { v <- a v + b K v ; s += v }
    n = v.shape[0]
    t = np.empty(n, dtype=np.complex128)
    for _ in range(steps):
        _separable_kernel(v, ep, em, cep, cem, t)
        for i in range(n):
            v[i] = a * v[i] + b * t[i]
            s[i] += v[i]


@dataclass(frozen=True)
class LSOperator:
    problem: WaveProblem
    medium: Medium
    grid: Grid
    q: np.ndarray = field(repr=False)
    matrix: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def k0(self) -> float:
        return self.problem.k0

    def matvec(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=np.complex128)

    __call__ = matvec

    def _factors(self):
        try:
            return self._cache
        except AttributeError:
            pass
        x = self.grid.nodes
        ep = np.exp(1j * self.k0 * x)
        em = np.conj(ep)
        c = self.q * self.grid.weights
        cache = (ep, em, ep * c, em * c)
        object.__setattr__(self, "_cache", cache)
        return cache

    def fast_matvec(self, v) -> np.ndarray:
        """``V v`` in O(n); agrees with :meth:`matvec` to rounding."""
        v = np.ascontiguousarray(v, dtype=np.complex128)
        out = np.empty_like(v)
        _separable_kernel(v, *self._factors(), out)
        return 0.5j * self.k0 * out

    def fast_rmatvec(self, v) -> np.ndarray:
        """``V^H v`` in O(n), using the symmetry of the kernel."""
        v = np.ascontiguousarray(np.conj(v), dtype=np.complex128)
        ep, em, _, _ = self._factors()
        ones = np.ones(self.n)
        out = np.empty_like(v)
        _separable_kernel(v, ep, em, ep * ones, em * ones, out)
        return -0.5j * self.k0 * self.q * self.grid.weights * np.conj(out)

    def advance_relaxed(self, v: np.ndarray, s: np.ndarray, a: complex, b: complex, steps: int) -> None:
        """In place, ``steps`` times: ``v <- a v + b V v`` then ``s += v``."""
        _relaxed_block(v, s, *self._factors(), complex(a), complex(b) * 0.5j * self.k0, int(steps))


def assemble(problem: WaveProblem, medium: Medium, grid: Grid | None = None) -> LSOperator:
    """Build the Nyström matrix of V_q(k0) on ``grid`` (default: midpoint grid of ``problem``)."""
    if grid is None:
        grid = make_grid(problem)
    check_support(medium, problem.L)
    q = sample_medium(medium, grid)
    x = grid.nodes
    kernel = np.exp(1j * problem.k0 * np.abs(x[:, None] - x[None, :]))
    matrix = (0.5j * problem.k0) * kernel * (q * grid.weights)[None, :]
    matrix.setflags(write=False)
    return LSOperator(problem, medium, grid, q, matrix)


def incident_wave(op: LSOperator) -> np.ndarray:
    return np.exp(1j * op.k0 * op.problem.khat * op.grid.nodes)


def incident_rhs(op: LSOperator) -> np.ndarray:
    """``psi = V exp(i k0 khat x)`` on the grid."""
    return op.matvec(incident_wave(op))


def direct_solve(op: LSOperator, rhs=None) -> np.ndarray:
    """Solve ``(I - V) u = rhs`` by LU (``rhs`` defaults to :func:`incident_rhs`)."""
    if rhs is None:
        rhs = incident_rhs(op)
    rhs = np.asarray(rhs, dtype=np.complex128)
    system = np.eye(op.n) - op.matrix
    try:
        u = numerics.lu_solve(system, rhs)
    except SingularMatrixError as exc:
        raise SingularMatrixError(f"I - V is singular on this grid: {exc}") from exc
    resid = np.linalg.norm(system @ u - rhs)
    if resid > 1e-9 * np.linalg.norm(rhs):
        raise NumericalError(f"direct solve residual {resid:.3e} exceeds contract")
    return u


def operator_norm(op: LSOperator, rtol: float = 1e-8, max_iter: int = 20000, seed: int = 0) -> float:
    """Largest singular value of the Nyström matrix by power iteration on V^H V."""
    if not np.any(op.q):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n)
    x /= np.linalg.norm(x)
    sigma = 0.0
    for it in range(max_iter):
        y = op.fast_matvec(x)
        est = np.linalg.norm(y)
        if est == 0.0:
            # start vector in the null space; restart from a perturbed vector
            x = x + 1e-3 * (rng.standard_normal(op.n) + 1j * rng.standard_normal(op.n))
            x /= np.linalg.norm(x)
            continue
        z = op.fast_rmatvec(y)
        x = z / np.linalg.norm(z)
        if it > 0 and abs(est - sigma) <= rtol * est:
            return float(est)
        sigma = est
    return float(sigma)


def spectral_radius(op: LSOperator, method: str = "dense") -> float:
    """Largest eigenvalue modulus of the Nyström matrix (``dense`` QR or ``krylov`` Ritz values)."""
    if method == "dense":
        return float(np.abs(numerics.eigenvalues_dense(op.matrix)).max())
    if method == "krylov":
        rng = np.random.default_rng(0)
        start = rng.standard_normal(op.n) + 0j
        prev, m = None, 32
        while True:
            proj = numerics.arnoldi(op.fast_matvec, start, m)
            r = float(np.abs(numerics.eigenvalues_dense(proj.hessenberg)).max())
            if proj.breakdown or m >= op.n or (prev is not None and abs(r - prev) <= 1e-10 * r):
                return r
            prev, m = r, 2 * m
    raise ValidationError(f"unknown method {method!r}")


def hilbert_schmidt_bound(problem: WaveProblem, medium: Medium) -> float:
    """``k0 sqrt(L) ||q||_2 / 2``, the Hilbert-Schmidt bound on the operator norm."""
    return 0.5 * problem.k0 * math.sqrt(problem.L) * medium.l2_norm(problem.L)


# --------------------------------------------------------------------------- FD oracle


def fd_solve(problem: WaveProblem, medium: Medium, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference solution of the scattered-wave boundary value problem.

    Solves ``psi'' + k0^2 (1 + q) psi = -k0^2 q exp(i k0 khat x)`` on ``m`` equispaced
    nodes of [0, L] with ``-psi'(0) = i k0 psi(0)`` and ``psi'(L) = i k0 psi(L)``.
    The one-sided second-order boundary differences are folded into the first and
    last rows using the neighbouring interior equation, which keeps the system
    tridiagonal.
    """
    if m < 3:
        raise ValidationError("FD grid needs m >= 3")
    if isinstance(medium, TabulatedMedium):
        raise MediumError("FD oracle needs a medium that can be evaluated off its table")
    check_support(medium, problem.L)
    k, L = problem.k0, problem.L
    x = np.linspace(0.0, L, m)
    h = x[1] - x[0]
    q = np.asarray(medium.evaluate(x), dtype=float)
    if np.any(q <= -1.0):
        raise MediumError("sampled contrast violates q > -1")
    f = -(k**2) * q * np.exp(1j * k * problem.khat * x)
    diag = -2.0 + (h * k) ** 2 * (1.0 + q) + 0j
    upper = np.ones(m - 1, dtype=complex)
    lower = np.ones(m - 1, dtype=complex)
    rhs = (h**2) * f
    # left closure: (3 - 2ikh) p0 - 4 p1 + p2 = 0, p2 eliminated with row 1
    diag[0] = 2.0 - 2.0j * k * h
    upper[0] = -(4.0 + diag[1])
    rhs[0] = -(h**2) * f[1]
    # right closure, mirrored
    diag[-1] = 2.0 - 2.0j * k * h
    lower[-1] = -(4.0 + diag[-2])
    rhs[-1] = -(h**2) * f[-2]
    ab = np.zeros((3, m), dtype=complex)
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    try:
        psi = solve_banded((1, 1), ab, rhs)
    except LinAlgError as exc:
        raise SingularMatrixError(f"FD tridiagonal system is singular: {exc}") from exc
    if not np.all(np.isfinite(psi)):
        raise SingularMatrixError("FD tridiagonal system is singular")
    return x, psi


def fd_oracle(problem: WaveProblem, medium: Medium, m: int | None = None, grid: Grid | None = None) -> np.ndarray:
    """:func:`fd_solve` linearly interpolated onto the Nyström grid (default ``m = 4 n``)."""
    if grid is None:
        grid = make_grid(problem)
    if m is None:
        m = 4 * grid.n
    x, psi = fd_solve(problem, medium, m)
    return np.interp(grid.nodes, x, psi.real) + 1j * np.interp(grid.nodes, x, psi.imag)


def weighted_norm(v, grid: Grid) -> float:
    """Discrete L2(]0, L[) norm with the grid's quadrature weights."""
    return float(np.sqrt(np.sum(grid.weights * np.abs(v) ** 2)))
