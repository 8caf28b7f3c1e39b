"""Complex relaxation ``M = (1 - gamma) I + gamma V`` that makes the Neumann series converge.

``(I - M) u = gamma psi`` is the same equation as ``(I - V) u = psi`` for any nonzero
``gamma``, and the eigenvalues of ``M`` are ``1 - gamma (1 - lam)``. With
``gamma = eps * exp(i alpha)`` and every ``lam`` in the open upper half plane, a
rotation ``alpha`` that puts ``exp(i alpha) (1 - lam)`` in the right half plane and a
small enough ``eps`` pull all of them into the unit disk.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import born
from .errors import ValidationError
from .lippmann import LSOperator, incident_rhs
from .problem import ConstantMedium
from .spectral import SpectralLocus, sample_locus

ANALYTIC = "analytic"
NUMERIC = "numeric"
DEFAULT_EPS_FRACTION = 0.9


@dataclass(frozen=True)
class PreconditionerParams:
    eps_prime: float
    alpha: float
    eps_max: float
    eps: float
    gamma: complex
    mode: str
    xi_plus: float | None = None
    xi_minus: float | None = None

    @property
    def admissible(self) -> bool:
        """Whether ``eps`` lies strictly inside the admissible interval ``(0, eps_max)``."""
        return 0.0 < self.eps < self.eps_max

    def as_dict(self) -> dict:
        d = asdict(self)
        d["gamma"] = [self.gamma.real, self.gamma.imag]
        d["admissible"] = self.admissible
        return d


def default_eps_prime(kappa: float, q0: float) -> float:
    return kappa * q0 + 1.0


def alpha_from_eps_prime(kappa: float, q0: float, eps_prime: float) -> float:
    half = 0.5 * kappa * q0
    if not eps_prime > half:
        raise ValidationError(f"eps' must exceed kappa*q0/2 = {half:g}, got {eps_prime:g}")
    return math.atan((1.0 + half * eps_prime) / (eps_prime - half))


def eps_bound(kappa: float, q0: float, angle: float) -> float:
    """``|tan(2 m)| / tan(m) / (1 + kappa q0 / 2)`` for the largest relevant angle ``m``."""
    if abs(2.0 * angle - math.pi) < 1e-6:
        raise ValidationError("degenerate angle: 2*max angle is within 1e-6 of pi")
    if abs(2.0 * angle - math.pi / 2) < 1e-12 or angle <= 0:
        raise ValidationError(f"angle {angle:g} gives no usable eps bound")
    return abs(math.tan(2.0 * angle)) / math.tan(angle) / (1.0 + 0.5 * kappa * q0)


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < math.pi / 2:
        raise ValidationError(f"alpha must lie in (0, pi/2), got {alpha}")
    return float(alpha)


def _make(eps_prime, alpha, eps_max, eps, mode, xi=(None, None)):
    if eps is None:
        eps = DEFAULT_EPS_FRACTION * eps_max
    if not eps > 0:
        raise ValidationError("eps must be positive")
    gamma = eps * complex(math.cos(alpha), math.sin(alpha))
    return PreconditionerParams(eps_prime, alpha, eps_max, float(eps), gamma, mode, *xi)


def gamma_analytic(kappa: float, q0: float, eps_prime: float | None = None, eps: float | None = None,
                   alpha: float | None = None) -> PreconditionerParams:
    """Closed-form ``alpha`` and admissible ``eps`` for a constant medium ``q0 > 0``.

    Without ``eps`` the returned value is ``0.9 * eps_max``; an explicit ``eps`` is
    kept as given and :attr:`PreconditionerParams.admissible` reports whether it is
    inside the bound. ``alpha`` overrides the angle derived from ``eps_prime``.
    """
    if not q0 > 0:
        raise ValidationError("the analytic preconditioner needs q0 > 0")
    if eps_prime is None:
        eps_prime = default_eps_prime(kappa, q0)
    derived = alpha_from_eps_prime(kappa, q0, eps_prime)
    alpha = derived if alpha is None else _check_alpha(alpha)
    angle = max(alpha, math.atan(eps_prime))
    return _make(float(eps_prime), alpha, eps_bound(kappa, q0, angle), eps, ANALYTIC)


def xi_numeric(locus: SpectralLocus, alpha: float) -> tuple[float, float]:
    """Extreme arguments of ``exp(i alpha) (1 - w)`` over the sampled locus, including the ``t -> 0`` limit."""
    z = np.exp(1j * alpha) * (1.0 - np.asarray(locus.lam))
    if np.any(z.real <= 0):
        raise ValidationError("exp(i alpha)(1 - w) leaves the right half plane; alpha too small for this locus")
    slopes = np.append(z.imag / z.real, math.tan(alpha))
    return math.atan(slopes.max()), math.atan(slopes.min())


def gamma_numeric(kappa: float, q0: float, eps_prime: float | None = None, eps: float | None = None,
                  alpha: float | None = None, locus: SpectralLocus | None = None) -> PreconditionerParams:
    """Same ``alpha`` as :func:`gamma_analytic`, with ``eps_max`` from the sampled angles."""
    if not q0 > 0:
        raise ValidationError("the preconditioner needs q0 > 0")
    if eps_prime is None:
        eps_prime = default_eps_prime(kappa, q0)
    derived = alpha_from_eps_prime(kappa, q0, eps_prime)
    alpha = derived if alpha is None else _check_alpha(alpha)
    if locus is None:
        locus = sample_locus(kappa, q0)
    xp, xm = xi_numeric(locus, alpha)
    angle = max(abs(xp), abs(xm))
    return _make(float(eps_prime), alpha, eps_bound(kappa, q0, angle), eps, NUMERIC, (xp, xm))


def gamma_from_spectrum(eigenvalues, q_samples, alpha: float | None = None, eps: float | None = None,
                        margin: float = 0.5) -> PreconditionerParams:
    """Relaxation parameter read off a computed spectrum, for media without a closed-form locus.

    Needs ``q >= 0`` (then every nonzero eigenvalue has positive imaginary part).
    ``alpha`` defaults to the smallest admissible rotation in ``[0, pi/2)`` plus
    ``margin`` of the remaining room to pi/2; ``eps_max = min 2 Re z / |z|^2`` over
    ``z = exp(i alpha)(1 - lam)`` is exactly where some ``|mu|`` reaches one.
    ``eps_prime`` is reported as ``nan`` in this mode.
    """
    q = np.asarray(q_samples, dtype=float)
    if np.any(q < 0) or not np.any(q > 0):
        raise ValidationError("spectral relaxation needs q >= 0 and q not identically zero")
    lam = np.asarray(eigenvalues, dtype=complex)
    sig = lam[np.abs(lam) > 1e-12 * max(1.0, np.abs(lam).max())]
    if alpha is None:
        if np.any(sig.imag <= 0):
            raise ValidationError("spectrum has eigenvalues off the open upper half plane")
        floor = max(0.0, math.atan(np.max((sig.real - 1.0) / sig.imag))) if sig.size else 0.0
        alpha = floor + margin * (math.pi / 2 - floor)
    alpha = _check_alpha(alpha)
    z = np.exp(1j * alpha) * (1.0 - lam)
    if np.any(z.real <= 0):
        raise ValidationError("alpha does not rotate the spectrum into the right half plane")
    eps_max = float(np.min(2.0 * z.real / np.abs(z) ** 2))
    return _make(float("nan"), alpha, eps_max, eps, "spectrum")


def transform_spectrum(points, gamma: complex) -> tuple[np.ndarray, bool]:
    """``mu = 1 - gamma (1 - lam)`` and whether every ``|mu| < 1``."""
    lam = np.asarray(points, dtype=complex)
    mu = 1.0 - gamma * (1.0 - lam)
    return mu, bool(np.all(np.abs(mu) < 1.0))


def relaxed_operator(op: LSOperator, gamma: complex):
    """``v -> (1 - gamma) v + gamma V v`` as a callable."""
    gamma = complex(gamma)

    def apply(v):
        return (1.0 - gamma) * v + gamma * op.matvec(v)

    return apply


def preconditioned_solve(
    op: LSOperator,
    params: PreconditionerParams,
    rhs=None,
    max_iter: int = 30_000_000,
    tol: float = 1e-8,
    record_every: int = 10_000,
    reference=None,
    compiled: bool = True,
) -> born.ConvergenceTrace:
    """Neumann series ``sum_j M^j gamma rhs`` for ``(I - V) u = rhs``.

    The trace's ``solution`` solves the original equation; its monitor is
    ``||M^n gamma rhs||``. With ``compiled`` the steps between records run in the
    O(n) compiled kernel of the operator.
    """
    if rhs is None:
        rhs = incident_rhs(op)
    gamma = params.gamma
    apply = relaxed_operator(op, gamma)
    start = gamma * np.asarray(rhs, dtype=np.complex128)
    advance = None
    if compiled:
        def advance(v, s, steps):
            op.advance_relaxed(v, s, 1.0 - gamma, gamma, steps)
    return born.iterate(apply, start, max_iter=max_iter, tol=tol, reference=reference,
                        advance=advance, record_every=record_every)


def constant_q0(op: LSOperator) -> float:
    if not isinstance(op.medium, ConstantMedium):
        raise ValidationError("this mode needs a constant medium")
    return float(op.medium.q0)
