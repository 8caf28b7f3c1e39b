"""Born/Neumann iteration engine with convergence monitoring and the a-posteriori rate constant.

The engine sums ``S_n = sum_{j<=n} A^j psi`` for an abstract operator application
``A``; ``psi`` is the right-hand side of ``(I - A) u = psi``. The monitor
``||A^n psi||`` tending to zero is necessary and sufficient for convergence of the
series, so verdicts are read off the monitor alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numerics
from .errors import ValidationError

CONVERGED = "converged"
DIVERGED = "diverged"
UNDECIDED = "undecided"

Apply = Callable[[np.ndarray], np.ndarray]
# advance(v, s, steps): in place, `steps` times v <- A v; s += v
Advance = Callable[[np.ndarray, np.ndarray, int], None]


@dataclass
class ConvergenceTrace:
    """Per-record history of one Neumann iteration.

    ``n[k]`` is the iteration index of record ``k``; ``monitor[k] = ||A^n psi||``,
    ``residual[k] = ||(I - A) S_n - psi||`` and ``err_vs_ref[k] = ||u* - S_n||`` when a
    reference solution was supplied.
    """

    n: np.ndarray
    monitor: np.ndarray
    residual: np.ndarray
    err_vs_ref: Optional[np.ndarray]
    verdict: str
    iterations: int
    solution: np.ndarray = field(repr=False)
    psi_norm: float = 0.0
    tol: float = 1e-10
    guard: float = 1e8
    window: int = 20
    recursion_gap: float = 0.0
    diagnostic: str = ""

    @property
    def final_residual(self) -> float:
        return float(self.residual[-1])


@dataclass(frozen=True)
class RateEstimate:
    """Spectral radius ``spr0`` of A restricted to the Krylov space of psi and ``C = ||(I-A0)^-1|| ||A0||``."""

    spr0: float
    C: float
    m: int
    breakdown: bool


def _classify(monitor: np.ndarray, psi_norm: float, tol: float, guard: float, window: int) -> tuple[str, str]:
    last = monitor[-1]
    if not np.isfinite(last):
        return DIVERGED, "non-finite iterate"
    if monitor.size > 1 and last <= tol * psi_norm:
        return CONVERGED, ""
    if last > guard * psi_norm:
        return DIVERGED, f"monitor exceeded guard {guard:g} * ||psi||"
    if monitor.size > window:
        tail = monitor[-(window + 1):]
        if np.all(np.diff(tail) > 0) and np.all(tail[1:] > monitor[0]):
            return DIVERGED, f"monitor grew for {window} consecutive records above its initial value"
    return UNDECIDED, ""


def iterate(
    apply: Apply,
    psi,
    max_iter: int = 500,
    tol: float = 1e-10,
    guard: float = 1e8,
    window: int = 20,
    reference=None,
    advance: Advance | None = None,
    record_every: int = 1,
) -> ConvergenceTrace:
    """Run ``u_{n+1} = psi + A u_n`` from ``u_0 = psi`` and record the monitor.

    Parameters
    ----------
    apply
        Operator application ``v -> A v``.
    psi
        Right-hand side; also the first term of the series.
    max_iter, tol
        Iteration budget and convergence threshold ``||A^n psi|| <= tol ||psi||``.
    guard, window
        Divergence is declared when the monitor exceeds ``guard * ||psi||`` or rises
        strictly for ``window`` consecutive records while above its initial value.
    reference
        Optional exact solution; its distance to every recorded partial sum is stored.
    advance
        Optional compiled stepper used between records instead of ``apply``.
        When omitted every step costs two applications (the power sequence and the
        residual of the partial sum).
    record_every
        Record (and test the verdict) only every this many iterations.
    """
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if record_every < 1:
        raise ValidationError("record_every must be >= 1")
    psi = np.array(psi, dtype=np.complex128)
    psi_norm = float(np.linalg.norm(psi))
    ref = None if reference is None else np.asarray(reference, dtype=np.complex128)

    v = psi.copy()
    s = psi.copy()
    ns, mon, res, err = [0], [psi_norm], [], []
    As = np.asarray(apply(s), dtype=np.complex128)
    res.append(float(np.linalg.norm(s - As - psi)))
    if ref is not None:
        err.append(float(np.linalg.norm(ref - s)))
    gap = 0.0
    verdict, diag = UNDECIDED, ""
    it = 0
    while it < max_iter:
        steps = min(record_every, max_iter - it)
        with np.errstate(all="ignore"):
            if advance is None:
                for _ in range(steps):
                    s_next = psi + As
                    v = np.asarray(apply(v), dtype=np.complex128)
                    s = s + v
                    scale = np.linalg.norm(s)
                    if scale > 0 and np.isfinite(scale):
                        gap = max(gap, float(np.linalg.norm(s - s_next) / scale))
                    As = np.asarray(apply(s), dtype=np.complex128)
            else:
                advance(v, s, steps)
                As = np.asarray(apply(s), dtype=np.complex128)
            it += steps
            ns.append(it)
            mon.append(float(np.linalg.norm(v)))
            res.append(float(np.linalg.norm(s - As - psi)))
            if ref is not None:
                err.append(float(np.linalg.norm(ref - s)))
        verdict, diag = _classify(np.asarray(mon), psi_norm, tol, guard, window)
        if verdict != UNDECIDED:
            break
    return ConvergenceTrace(
        n=np.asarray(ns),
        monitor=np.asarray(mon),
        residual=np.asarray(res),
        err_vs_ref=None if ref is None else np.asarray(err),
        verdict=verdict,
        iterations=it,
        solution=s,
        psi_norm=psi_norm,
        tol=tol,
        guard=guard,
        window=window,
        recursion_gap=gap,
        diagnostic=diag,
    )


def suzuki_verdict(trace: ConvergenceTrace) -> str:
    """Verdict from the monitor sequence alone, with the thresholds stored on the trace."""
    return _classify(np.asarray(trace.monitor), trace.psi_norm, trace.tol, trace.guard, trace.window)[0]


def _rate_from_projection(proj: numerics.KrylovProjection) -> RateEstimate:
    H = proj.hessenberg
    m = H.shape[0]
    spr0 = float(np.abs(numerics.eigenvalues_dense(H)).max())
    hnorm = float(np.linalg.norm(H, 2))
    try:
        inv_norm = float(np.linalg.norm(np.linalg.inv(np.eye(m) - H), 2))
    except np.linalg.LinAlgError:
        inv_norm = np.inf
    return RateEstimate(spr0, inv_norm * hnorm, m, proj.breakdown)


def rate_estimate(apply: Apply, psi, m: int = 64, adaptive: bool = True, rtol: float = 1e-6) -> RateEstimate:
    """Ritz spectral radius and error constant of A on the Krylov space of psi.

    With ``adaptive`` the Krylov order is doubled until ``spr0`` changes by less than
    ``rtol`` (relative), the space breaks down, or the order reaches ``len(psi)``.
    """
    if m < 1:
        raise ValidationError("Krylov order must be >= 1")
    psi = np.asarray(psi, dtype=np.complex128)
    n = psi.size
    est = _rate_from_projection(numerics.arnoldi(apply, psi, min(m, n)))
    while adaptive and not est.breakdown and est.m < n:
        nxt = _rate_from_projection(numerics.arnoldi(apply, psi, min(2 * est.m, n)))
        done = abs(nxt.spr0 - est.spr0) <= rtol * max(nxt.spr0, 1e-300)
        est = nxt
        if done:
            break
    return est


@dataclass(frozen=True)
class TailBoundReport:
    passed: bool
    max_ratio: float
    C: float
    ratios: np.ndarray


def tail_bound_check(trace: ConvergenceTrace, rate: RateEstimate, burn_in: int = 3,
                     slack: float = 0.1, noise_floor: float = 1e-9) -> TailBoundReport:
    """Check ``||u - S_n|| <= C ||A^n psi||`` along a converged trace.

    The trace must have been recorded with a reference solution. Records with
    ``n < burn_in`` or with the monitor below ``noise_floor * ||psi||`` (where rounding
    in the reference dominates) are skipped.
    """
    if trace.verdict != CONVERGED:
        raise ValidationError("tail bound is not applicable to a trace that did not converge")
    if trace.err_vs_ref is None:
        raise ValidationError("trace was recorded without a reference solution")
    mask = (trace.n >= burn_in) & (trace.monitor > noise_floor * trace.psi_norm)
    ratios = trace.err_vs_ref[mask] / trace.monitor[mask]
    max_ratio = float(ratios.max()) if ratios.size else 0.0
    return TailBoundReport(bool(max_ratio <= rate.C * (1.0 + slack)), max_ratio, rate.C, ratios)
