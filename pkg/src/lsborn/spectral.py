"""Eigenvalue geometry of the constant-medium operator on ]0, L[.

For ``q == q0`` an eigenpair ``V phi = lam phi`` turns into the Helmholtz problem
``phi'' + k0^2 s^2 phi = 0`` with outgoing impedance conditions, where
``s = sqrt(1 + q0 / lam)``. Writing ``phi = A exp(i k0 s x) + B exp(-i k0 s x)`` gives
``B = A (s + 1) / (s - 1)`` and ``exp(2 i kappa s) = (s + 1)^2 / (s - 1)^2`` with
``kappa = k0 L``. Taking moduli confines ``s = a + i t`` to the curves

    a = (-cosh(kappa t) -/+ sqrt(1 - t^2 sinh^2(kappa t))) / sinh(kappa t),
    0 < t <= T,  T sinh(kappa T) = 1,

and hence every nonzero eigenvalue to ``q0 / (s^2 - 1)`` on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lippmann, numerics
from .errors import ValidationError
from .problem import ConstantMedium, WaveProblem

BRANCH_MINUS = -1
BRANCH_PLUS = 1
RADICAND_TOL = 1e-14


def solve_T(kappa: float) -> float:
    """Unique positive root of ``T sinh(kappa T) = 1`` (bisection, then Newton)."""
    if not (kappa > 0 and math.isfinite(kappa)):
        raise ValidationError(f"kappa must be positive, got {kappa}")

    def f(t):
        return t * math.sinh(kappa * t) - 1.0

    lo, hi = 0.0, 1.0
    while f(hi) < 0:
        lo, hi = hi, 2.0 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-6 * hi:
            break
    t = 0.5 * (lo + hi)
    for _ in range(50):
        ft = f(t)
        if abs(ft) <= 1e-15:
            break
        t_new = t - ft / (math.sinh(kappa * t) + kappa * t * math.cosh(kappa * t))
        if t_new == t:
            break
        t = t_new
    return t


def locus_s(kappa: float, t, branch: int) -> np.ndarray:
    """Points ``s(t)`` of the branch S- (``branch=-1``) or S+ (``branch=+1``)."""
    t = np.asarray(t, dtype=float)
    sh = np.sinh(kappa * t)
    rad = 1.0 - (t * sh) ** 2
    root = np.sqrt(np.clip(rad, 0.0, None))
    return (-np.cosh(kappa * t) + branch * root) / sh + 1j * t


@dataclass(frozen=True)
class SpectralLocus:
    """Samples of the curve containing the spectrum.

    Samples are ordered along the curve: S- with increasing t, then S+ with
    decreasing t, so consecutive samples form a connected polyline through the
    junction at ``t = T``.
    """

    kappa: float
    q0: float
    T: float
    t: np.ndarray = field(repr=False)
    branch: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)

    def __len__(self):
        return self.t.size

    @property
    def omega(self) -> np.ndarray:
        return self.lam


def sample_locus(kappa: float, q0: float, count: int = 4000, t_min_rel: float = 1e-6) -> SpectralLocus:
    """Sample both branches on a geometric t-grid in ``[t_min_rel T, T]``."""
    if count < 2:
        raise ValidationError("count must be >= 2")
    if q0 == 0 or not math.isfinite(q0):
        raise ValidationError("the locus needs a nonzero finite q0")
    T = solve_T(kappa)
    t = np.geomspace(T * t_min_rel, T, count)
    t = t[1.0 - (t * np.sinh(kappa * t)) ** 2 >= -RADICAND_TOL]
    ts, branches, ss = [], [], []
    for branch, order in ((BRANCH_MINUS, t), (BRANCH_PLUS, t[::-1])):
        ts.append(order)
        branches.append(np.full(order.size, branch))
        ss.append(locus_s(kappa, order, branch))
    t_all = np.concatenate(ts)
    s_all = np.concatenate(ss)
    # the radicand vanishes at T by definition; rounding would leave a sqrt(eps) gap
    s_all[t_all == T] = -1.0 / math.tanh(kappa * T) + 1j * T
    lam = q0 / (s_all**2 - 1.0)
    return SpectralLocus(kappa, q0, T, t_all, np.concatenate(branches), s_all, lam)


def locus_distance(points, locus: SpectralLocus) -> np.ndarray:
    """Euclidean distance from each point to the polyline through the locus samples."""
    p = np.atleast_1d(np.asarray(points, dtype=complex))
    a = locus.lam[:-1]
    d = locus.lam[1:] - a
    dd = np.abs(d) ** 2
    out = np.empty(p.size)
    for k, z in enumerate(p):
        u = np.zeros_like(dd)
        nz = dd > 0
        u[nz] = np.clip(((z - a[nz]) * np.conj(d[nz])).real / dd[nz], 0.0, 1.0)
        seg = np.abs(a + u * d - z)
        out[k] = min(seg.min(), np.abs(locus.lam - z).min())
    return out


# --------------------------------------------------------------------------- transcendental equation


def char_function(s, kappa: float):
    """``F(s) = exp(2 i kappa s) (s - 1)^2 - (s + 1)^2``."""
    e = np.exp(2j * kappa * s)
    return e * (s - 1) ** 2 - (s + 1) ** 2


def _char_derivative(s, kappa: float):
    e = np.exp(2j * kappa * s)
    return e * (2j * kappa * (s - 1) ** 2 + 2 * (s - 1)) - 2 * (s + 1)


@dataclass(frozen=True)
class EigenpairReport:
    lam: complex
    s: complex
    A: complex
    B: complex
    F_abs: float
    residual: float


@dataclass(frozen=True)
class TranscendentalResult:
    pairs: list
    dropped_seeds: int


def newton_root(s0: complex, kappa: float, tol: float = 1e-13, max_iter: int = 60) -> complex | None:
    s = complex(s0)
    for _ in range(max_iter):
        F = char_function(s, kappa)
        dF = _char_derivative(s, kappa)
        if dF == 0 or not np.isfinite(dF):
            return None
        step = F / dF
        s -= step
        if not np.isfinite(s):
            return None
        if abs(step) <= tol * max(1.0, abs(s)):
            return s
    return None


def eigenfunction(s: complex, kappa: float, x) -> tuple[np.ndarray, complex, complex]:
    """``phi(x) = A exp(i kappa s x) + B exp(-i kappa s x)`` on the unit interval with ``A = 1``."""
    A = 1.0 + 0j
    B = A * (s + 1) / (s - 1)
    x = np.asarray(x, dtype=float)
    return A * np.exp(1j * kappa * s * x) + B * np.exp(-1j * kappa * s * x), A, B


def eig_transcendental(
    kappa: float,
    q0: float,
    seeds=None,
    n_check: int = 2048,
    min_abs_lambda: float = 1e-2,
    f_tol: float = 1e-10,
    dedup_tol: float = 1e-8,
) -> TranscendentalResult:
    """Refine locus points into roots of the characteristic equation and check each eigenfunction.

    ``seeds`` are complex ``s`` values (default: a 400-point locus, restricted to
    ``|lam| >= min_abs_lambda``). Each accepted root carries the relative Nyström
    residual ``||V phi - lam phi|| / ||phi||`` on an ``n_check``-node midpoint grid of
    the unit interval with wavenumber ``kappa`` (the spectrum depends on k0 and L
    only through ``kappa``).
    """
    if seeds is None:
        loc = sample_locus(kappa, q0, count=400)
        seeds = loc.s[np.abs(loc.lam) >= min_abs_lambda]
    problem = WaveProblem(k0=kappa, L=1.0, n=n_check)
    op = lippmann.assemble(problem, ConstantMedium(q0))
    grid = op.grid

    roots: list[complex] = []
    dropped = 0
    for seed in np.atleast_1d(seeds):
        r = newton_root(seed, kappa)
        if r is None:
            dropped += 1
            continue
        if r.imag < 0:
            r = -r
        if r.imag <= 1e-10 or abs(r - 1) < 1e-8 or abs(char_function(r, kappa)) > f_tol:
            dropped += 1
            continue
        if any(abs(r - o) <= dedup_tol * max(1.0, abs(r)) for o in roots):
            continue
        roots.append(r)

    pairs = []
    for r in roots:
        lam = q0 / (r * r - 1.0)
        phi, A, B = eigenfunction(r, kappa, grid.nodes)
        Vphi = op.fast_matvec(phi)
        resid = lippmann.weighted_norm(Vphi - lam * phi, grid) / lippmann.weighted_norm(phi, grid)
        pairs.append(EigenpairReport(complex(lam), complex(r), A, B, float(abs(char_function(r, kappa))), float(resid)))
    pairs.sort(key=lambda p: -abs(p.lam))
    return TranscendentalResult(pairs, dropped)


# --------------------------------------------------------------------------- numeric side


def numeric_spectrum(op: lippmann.LSOperator) -> np.ndarray:
    """All eigenvalues of the assembled matrix, by descending magnitude."""
    ev = numerics.eigenvalues_dense(op.matrix)
    return ev[np.argsort(-np.abs(ev), kind="stable")]


@dataclass(frozen=True)
class RatioBoundReport:
    passed: bool
    max_ratio: float
    bound: float
    tends_to_minus_infinity: bool


def ratio_bound_check(locus: SpectralLocus, n_small: int = 10) -> RatioBoundReport:
    """Check ``(Re w - 1) / Im w <= q0 kappa / 2`` on every sample and the descent to minus infinity as t -> 0."""
    if locus.q0 <= 0:
        raise ValidationError("ratio bound needs q0 > 0")
    w = locus.lam
    ratio = (w.real - 1.0) / w.imag
    bound = locus.q0 * locus.kappa / 2.0
    descending = True
    for b in (BRANCH_MINUS, BRANCH_PLUS):
        sel = locus.branch == b
        order = np.argsort(locus.t[sel])
        r = ratio[sel][order][:n_small]
        # decreasing t must push the ratio down
        descending &= bool(np.all(np.diff(r) > 0))
    return RatioBoundReport(bool(np.all(ratio <= bound + 1e-10)), float(ratio.max()), bound, descending)
