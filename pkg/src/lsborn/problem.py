"""Physical problem description, contrast media and the quadrature grid on ]0, L[."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .errors import MediumError, ValidationError

RULES = ("midpoint", "trapezoid")


def default_grid_size(kappa: float) -> int:
    """Grid size used when none is requested: 256 nodes per wavelength in ]0, L[, at least 256."""
    wavelengths = math.ceil(kappa / (2.0 * math.pi))
    return max(256, 256 * wavelengths)


@dataclass(frozen=True)
class WaveProblem:
    """Wavenumber ``k0``, domain length ``L``, incidence sign ``khat`` and grid size ``n``.

    ``n=None`` resolves to :func:`default_grid_size` of ``k0 * L``.
    """

    k0: float
    L: float = 1.0
    khat: int = 1
    n: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.k0) and self.k0 > 0):
            raise ValidationError(f"k0 must be positive and finite, got {self.k0}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValidationError(f"L must be positive and finite, got {self.L}")
        if self.khat not in (1, -1):
            raise ValidationError(f"khat must be +1 or -1, got {self.khat}")
        if not math.isfinite(self.k0 * self.L):
            raise ValidationError("k0*L overflows")
        if self.n is None:
            object.__setattr__(self, "n", default_grid_size(self.k0 * self.L))
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"grid size n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def kappa(self) -> float:
        return self.k0 * self.L


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    weights: np.ndarray
    rule: str = "midpoint"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise ValidationError("nodes and weights must be equal-length 1-D arrays")
        if np.any(np.diff(nodes) <= 0):
            raise ValidationError("grid nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValidationError("quadrature weights must be positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def length(self) -> float:
        return float(self.weights.sum())


def make_grid(problem: WaveProblem, rule: str = "midpoint") -> Grid:
    """Nyström nodes and weights on [0, L].

    ``midpoint`` puts nodes at cell centres ``(i + 1/2) L / n`` with weight ``L / n``;
    ``trapezoid`` uses ``n`` equispaced nodes including both endpoints.
    """
    n, L = problem.n, problem.L
    if n < 2:
        raise ValidationError("grid size must be >= 2")
    if rule == "midpoint":
        h = L / n
        nodes = (np.arange(n) + 0.5) * h
        weights = np.full(n, h)
    elif rule == "trapezoid":
        h = L / (n - 1)
        nodes = np.linspace(0.0, L, n)
        weights = np.full(n, h)
        weights[0] = weights[-1] = 0.5 * h
    else:
        raise ValidationError(f"unknown quadrature rule {rule!r}; expected one of {RULES}")
    return Grid(nodes, weights, rule)


# --------------------------------------------------------------------------- media


@dataclass(frozen=True)
class ConstantMedium:
    q0: float

    def __post_init__(self):
        if not math.isfinite(self.q0) or self.q0 <= -1.0:
            raise MediumError(f"contrast must satisfy q > -1, got q0={self.q0}")

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.full(np.shape(x), float(self.q0))

    def l2_norm(self, L: float) -> float:
        return abs(self.q0) * math.sqrt(L)

    @property
    def is_zero(self) -> bool:
        return self.q0 == 0.0


@dataclass(frozen=True)
class PiecewiseConstantMedium:
    """``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``; the last interval is closed."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        b = tuple(float(v) for v in self.breakpoints)
        q = tuple(float(v) for v in self.values)
        if len(b) != len(q) + 1 or len(q) == 0:
            raise MediumError("need len(breakpoints) == len(values) + 1")
        if any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise MediumError("breakpoints must be strictly increasing")
        if b[0] < 0.0:
            raise MediumError("medium support must lie in [0, L]")
        if any(not math.isfinite(v) or v <= -1.0 for v in q):
            raise MediumError(f"contrast must satisfy q > -1, got {q}")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", q)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        b = np.asarray(self.breakpoints)
        idx = np.searchsorted(b, x, side="right") - 1
        idx = np.where(x == b[-1], len(self.values) - 1, idx)
        out = np.zeros_like(x)
        inside = (idx >= 0) & (idx < len(self.values))
        out[inside] = np.asarray(self.values)[idx[inside]]
        return out

    def l2_norm(self, L: float) -> float:
        b = np.clip(np.asarray(self.breakpoints), 0.0, L)
        return math.sqrt(float(np.sum(np.diff(b) * np.asarray(self.values) ** 2)))

    @property
    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)


@dataclass(frozen=True)
class TabulatedMedium:
    """Nodewise samples; only usable on a grid whose nodes coincide with ``x``."""

    x: np.ndarray
    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if x.ndim != 1 or x.shape != q.shape or x.size < 2:
            raise MediumError("tabulated medium needs matching 1-D x and q with >= 2 rows")
        if np.any(np.diff(x) <= 0):
            raise MediumError("tabulated x must be strictly increasing")
        if not np.all(np.isfinite(q)) or np.any(q <= -1.0):
            raise MediumError("contrast must satisfy q > -1 at every tabulated point")
        x.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "q", q)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.x.shape or not np.allclose(x, self.x, rtol=0, atol=1e-12 * max(1.0, abs(self.x[-1]))):
            raise MediumError("tabulated medium is held nodewise; grid nodes do not match the table")
        return np.array(self.q)

    def l2_norm(self, L: float) -> float:
        return math.sqrt(float(np.trapezoid(self.q**2, self.x)))

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.q == 0.0))


Medium = Union[ConstantMedium, PiecewiseConstantMedium, TabulatedMedium]


def check_support(medium: Medium, L: float) -> None:
    if isinstance(medium, PiecewiseConstantMedium) and medium.breakpoints[-1] > L * (1 + 1e-12):
        raise MediumError("piecewise medium extends beyond [0, L]")
    if isinstance(medium, TabulatedMedium) and (medium.x[0] < 0.0 or medium.x[-1] > L * (1 + 1e-12)):
        raise MediumError("tabulated medium extends beyond [0, L]")


def sample_medium(medium: Medium, grid: Grid) -> np.ndarray:
    """q at every grid node; raises :class:`MediumError` if any sample is <= -1."""
    q = np.asarray(medium.evaluate(grid.nodes), dtype=float)
    if not np.all(np.isfinite(q)) or np.any(q <= -1.0):
        raise MediumError("sampled contrast violates q > -1")
    return q


def read_medium_csv(path: Union[str, Path], L: float) -> TabulatedMedium:
    """Read a ``x,q`` CSV sorted by x; rows outside [0, L] are rejected."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["x", "q"]:
            raise MediumError(f"{path}: expected header 'x,q'")
        rows = [(float(r["x"]), float(r["q"])) for r in reader]
    if not rows:
        raise MediumError(f"{path}: no rows")
    x, q = map(np.array, zip(*rows))
    if x[0] < 0.0 or x[-1] > L:
        raise MediumError(f"{path}: x values must lie in [0, {L}]")
    return TabulatedMedium(x, q)
