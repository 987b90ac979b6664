"""Discrete measure spaces, time grids, spectral kernels and the alpha-norms on them.

Every object here is a finite approximation of the continuous objects in the
theory: a measure space is a list of atoms with strictly positive masses, a
time index set is a finite grid with lambda-weights, and a spectral kernel is
the matrix ``values[i, j] = f_{t_i}(s_j)``.  All integrals over ``S`` are
finite mass-weighted sums, evaluated with :func:`math.fsum` so that the
result is correctly rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DimensionError, RegimeError, StabAssocError

SUM = "sum"
MAX = "max"
REGIMES = (SUM, MAX)

INTEGER_LATTICE = "integer-lattice"
REAL_GRID = "real-grid"

SIGNED = "signed"
NONNEGATIVE = "nonnegative"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StabilityIndex:
    """Stability index ``alpha`` tagged with the regime it is used in.

    The sum regime requires ``0 < alpha < 2`` (the Gaussian case is
    excluded), the max regime any ``alpha > 0``.
    """

    alpha: float
    regime: str = SUM

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise StabAssocError(f"unknown regime {self.regime!r}")
        a = float(self.alpha)
        if not (math.isfinite(a) and a > 0):
            raise StabAssocError(f"alpha must be a positive finite number, got {self.alpha!r}")
        if self.regime == SUM and not a < 2:
            raise StabAssocError(f"sum regime requires 0 < alpha < 2, got {a}")
        object.__setattr__(self, "alpha", a)

    def __float__(self):
        return self.alpha


def alpha_value(alpha, regime: str | None = None) -> float:
    """Return ``alpha`` as a float, validating it for ``regime`` when given."""
    if isinstance(alpha, StabilityIndex):
        if regime is not None and regime != alpha.regime:
            return StabilityIndex(alpha.alpha, regime).alpha
        return alpha.alpha
    if regime is None:
        a = float(alpha)
        if not (math.isfinite(a) and a > 0):
            raise StabAssocError(f"alpha must be a positive finite number, got {alpha!r}")
        return a
    return StabilityIndex(alpha, regime).alpha


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """Finite measure space: atoms ``s_j`` with masses ``mu({s_j}) > 0``.

    ``points`` are opaque identifiers (defaults to ``0..n-1``).
    ``coordinates`` optionally holds a real coordinate row per point, e.g.
    ``(x, u)`` cell midpoints for a quadrature grid on ``E x R``.
    """

    masses: np.ndarray
    points: tuple = None
    coordinates: np.ndarray | None = None

    def __post_init__(self):
        masses = _frozen(self.masses).reshape(-1)
        if masses.size and not (np.all(np.isfinite(masses)) and np.all(masses > 0)):
            raise StabAssocError("every mass must be strictly positive and finite")
        points = tuple(range(masses.size)) if self.points is None else tuple(self.points)
        if len(points) != masses.size:
            raise DimensionError(f"{len(points)} points but {masses.size} masses")
        if len(set(points)) != len(points):
            raise StabAssocError("point identifiers must be distinct")
        coords = self.coordinates
        if coords is not None:
            coords = _frozen(coords)
            if coords.ndim == 1:
                coords = coords.reshape(-1, 1)
                coords.setflags(write=False)
            if coords.shape[0] != masses.size:
                raise DimensionError("coordinates must have one row per point")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "coordinates", coords)

    @property
    def size(self) -> int:
        return self.masses.size

    def __len__(self):
        return self.size

    def restrict(self, indices) -> "MeasureSpace":
        """Sub-space on the atoms at positions ``indices`` (order kept as given)."""
        idx = np.asarray(indices, dtype=int).reshape(-1)
        coords = None if self.coordinates is None else self.coordinates[idx]
        return MeasureSpace(self.masses[idx], [self.points[i] for i in idx], coords)

    def same_as(self, other: "MeasureSpace") -> bool:
        return self.points == other.points and np.array_equal(self.masses, other.masses)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times with lambda-weights.

    ``kind="integer-lattice"`` stands for ``T = Z`` with counting measure (unit
    weights, integer times); ``kind="real-grid"`` for ``T = R`` with Lebesgue
    measure discretized by cell widths.
    """

    times: np.ndarray
    lambda_weights: np.ndarray = None
    kind: str = REAL_GRID

    def __post_init__(self):
        times = _frozen(self.times).reshape(-1)
        if times.size == 0:
            raise DimensionError("a time grid needs at least one time")
        if not np.all(np.isfinite(times)):
            raise StabAssocError("times must be finite")
        if np.any(np.diff(times) <= 0):
            raise StabAssocError("times must be strictly increasing")
        if self.kind not in (INTEGER_LATTICE, REAL_GRID):
            raise StabAssocError(f"unknown time grid kind {self.kind!r}")
        if self.lambda_weights is None:
            if self.kind == INTEGER_LATTICE or times.size == 1:
                w = np.ones_like(times)
            else:
                # cell widths of the Voronoi cells around each time
                edges = np.concatenate(([times[0] - (times[1] - times[0]) / 2],
                                        (times[1:] + times[:-1]) / 2,
                                        [times[-1] + (times[-1] - times[-2]) / 2]))
                w = np.diff(edges)
        else:
            w = self.lambda_weights
        w = _frozen(w).reshape(-1)
        if w.size != times.size:
            raise DimensionError("lambda_weights must match times")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise StabAssocError("lambda_weights must be nonnegative and finite")
        if self.kind == INTEGER_LATTICE:
            if not np.array_equal(times, np.round(times)):
                raise StabAssocError("integer-lattice grid requires integer times")
            if not np.all(w == 1.0):
                raise StabAssocError("integer-lattice grid requires unit weights")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "lambda_weights", w)

    @classmethod
    def lattice(cls, start: int, stop: int) -> "TimeGrid":
        """Integer times ``start, start+1, ..., stop`` (inclusive)."""
        return cls(np.arange(int(start), int(stop) + 1, dtype=float), kind=INTEGER_LATTICE)

    @classmethod
    def uniform(cls, start: float, stop: float, step: float) -> "TimeGrid":
        """Real grid ``start + k*step`` up to ``stop`` with weight ``step`` each."""
        if step <= 0:
            raise StabAssocError("step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        times = start + step * np.arange(n)
        return cls(times, np.full(n, float(step)), kind=REAL_GRID)

    @property
    def size(self) -> int:
        return self.times.size

    def __len__(self):
        return self.size

    def index_of(self, t: float) -> int:
        i = int(np.searchsorted(self.times, t))
        if i < self.size and math.isclose(self.times[i], t, rel_tol=0, abs_tol=1e-12):
            return i
        if i > 0 and math.isclose(self.times[i - 1], t, rel_tol=0, abs_tol=1e-12):
            return i - 1
        raise DimensionError(f"time {t} is not on the grid")

    def subgrid(self, indices) -> "TimeGrid":
        idx = np.asarray(indices, dtype=int)
        return TimeGrid(self.times[idx], self.lambda_weights[idx], self.kind)


@dataclass(frozen=True, eq=False)
class SpectralKernel:
    """Tabulated spectral functions ``values[i, j] = f_{t_i}(s_j)``.

    ``sign_class`` is inferred when omitted.  A kernel declared
    ``"nonnegative"`` must have no negative entry.  ``meta`` carries free-form
    provenance (family name, quadrature notes, truncation bounds).
    """

    space: MeasureSpace
    grid: TimeGrid
    values: np.ndarray
    sign_class: str = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2:
            if values.size == 0 and self.space.size == 0:
                values = _frozen(np.zeros((self.grid.size, 0)))
            else:
                raise DimensionError("kernel values must be a 2-d array (times x points)")
        if values.shape != (self.grid.size, self.space.size):
            raise DimensionError(
                f"values shape {values.shape} does not match grid x space "
                f"({self.grid.size}, {self.space.size})")
        if not np.all(np.isfinite(values)):
            raise StabAssocError("kernel values must be finite")
        nonneg = bool(np.all(values >= 0))
        sign = self.sign_class
        if sign is None:
            sign = NONNEGATIVE if nonneg else SIGNED
        if sign not in (SIGNED, NONNEGATIVE):
            raise StabAssocError(f"unknown sign class {sign!r}")
        if sign == NONNEGATIVE and not nonneg:
            raise RegimeError("kernel declared nonnegative has negative entries")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sign_class", sign)

    @property
    def n_times(self) -> int:
        return self.grid.size

    @property
    def n_points(self) -> int:
        return self.space.size

    @property
    def masses(self) -> np.ndarray:
        return self.space.masses

    @property
    def is_nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0))

    def check_alpha(self, alpha) -> None:
        """Raise unless every row has a finite alpha-norm."""
        a = alpha_value(alpha)
        with np.errstate(over="ignore"):
            total = np.abs(self.values) ** a @ self.masses
        if not np.all(np.isfinite(total)):
            raise StabAssocError("some kernel row has an infinite alpha-norm")

    def row_norms(self, alpha) -> np.ndarray:
        """Scale coefficients ``||f_t||_alpha`` for every time."""
        a = alpha_value(alpha)
        return np.array([_power_integral(np.abs(r), self.masses, a) ** (1 / a)
                         for r in self.values])

    def rectified(self) -> "SpectralKernel":
        """The kernel ``|f_t|`` (nonnegative)."""
        return SpectralKernel(self.space, self.grid, np.abs(self.values), NONNEGATIVE,
                              dict(self.meta, rectified=True))

    def restrict_points(self, indices) -> "SpectralKernel":
        idx = np.asarray(indices, dtype=int).reshape(-1)
        sign = self.sign_class if self.sign_class == NONNEGATIVE else None
        return SpectralKernel(self.space.restrict(idx), self.grid, self.values[:, idx],
                              sign, dict(self.meta))

    def restrict_times(self, indices) -> "SpectralKernel":
        idx = np.asarray(indices, dtype=int).reshape(-1)
        sign = self.sign_class if self.sign_class == NONNEGATIVE else None
        return SpectralKernel(self.space, self.grid.subgrid(idx), self.values[idx],
                              sign, dict(self.meta))

    def with_values(self, values, space: MeasureSpace | None = None) -> "SpectralKernel":
        return SpectralKernel(self.space if space is None else space, self.grid, values,
                              meta=dict(self.meta))


def _power_integral(absvals: np.ndarray, masses: np.ndarray, alpha: float) -> float:
    """``sum_j mu_j |v_j|^alpha`` with correctly rounded accumulation."""
    if absvals.size == 0:
        return 0.0
    terms = masses * absvals ** alpha
    return math.fsum(terms.tolist())


def _rows_and_coeffs(kernel_rows, coeffs, masses):
    rows = np.asarray(kernel_rows, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(1, -1)
    coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
    if rows.ndim != 2 or coeffs.size != rows.shape[0]:
        raise DimensionError(f"{coeffs.size} coefficients for {rows.shape[0]} kernel rows")
    if masses is None:
        masses = np.ones(rows.shape[1])
    masses = np.asarray(masses, dtype=float).reshape(-1)
    if masses.size != rows.shape[1]:
        raise DimensionError("masses must match the number of kernel columns")
    if not (np.all(np.isfinite(rows)) and np.all(np.isfinite(coeffs))):
        raise StabAssocError("kernel values and coefficients must be finite")
    return rows, coeffs, masses


def sum_integral(kernel_rows, coeffs, alpha, masses=None) -> float:
    """``int_S |sum_j a_j f_j|^alpha dmu`` (the exponent in the joint characteristic function)."""
    a = alpha_value(alpha)
    rows, coeffs, masses = _rows_and_coeffs(kernel_rows, coeffs, masses)
    combo = coeffs @ rows
    return _power_integral(np.abs(combo), masses, a)


def max_integral(kernel_rows, coeffs, alpha, masses=None) -> float:
    """``int_S (max_j a_j f_j)^alpha dmu`` for nonnegative rows and coefficients."""
    a = alpha_value(alpha)
    rows, coeffs, masses = _rows_and_coeffs(kernel_rows, coeffs, masses)
    if np.any(coeffs < 0):
        raise RegimeError("max-linear combinations need nonnegative coefficients")
    if np.any(rows < 0):
        raise RegimeError("max-linear combinations need nonnegative kernel values")
    if rows.shape[1] == 0:
        return 0.0
    combo = np.max(coeffs[:, None] * rows, axis=0)
    return _power_integral(combo, masses, a)


def sum_norm(kernel_rows, coeffs, alpha, masses=None) -> float:
    """L^alpha norm of the linear combination ``sum_j a_j f_j``.

    Parameters
    ----------
    kernel_rows : array_like, shape (n, m)
        Spectral function values ``f_{t_j}(s)`` at the ``m`` atoms.
    coeffs : array_like, shape (n,)
        Real coefficients ``a_j``.
    alpha : float or StabilityIndex
        Any ``alpha > 0`` is accepted on a finite space.
    masses : array_like, shape (m,), optional
        Atom masses, unit masses by default.

    Returns
    -------
    float
        ``(sum_s mu_s |sum_j a_j f_j(s)|^alpha) ** (1/alpha)``.
    """
    a = alpha_value(alpha)
    return sum_integral(kernel_rows, coeffs, a, masses) ** (1 / a)


def max_norm(kernel_rows, coeffs, alpha, masses=None) -> float:
    """L^alpha norm of the max-linear combination ``max_j a_j f_j``.

    Rows and coefficients must be nonnegative.
    """
    a = alpha_value(alpha)
    return max_integral(kernel_rows, coeffs, a, masses) ** (1 / a)


def rho_metric(f, g, alpha, masses=None) -> float:
    """``int_S |f^alpha - g^alpha| dmu`` for nonnegative ``f, g``."""
    a = alpha_value(alpha)
    f = np.asarray(f, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    if f.shape != g.shape:
        raise DimensionError("f and g must live on the same space")
    if np.any(f < 0) or np.any(g < 0):
        raise RegimeError("rho metric is defined for nonnegative functions")
    masses = np.ones(f.size) if masses is None else np.asarray(masses, dtype=float).reshape(-1)
    if masses.size != f.size:
        raise DimensionError("masses must match the function length")
    return math.fsum((masses * np.abs(f ** a - g ** a)).tolist())


def lalpha_metric(f, g, alpha, masses=None) -> float:
    """Metric ``||f - g||_alpha ** min(1, alpha)`` on L^alpha."""
    a = alpha_value(alpha)
    diff = np.asarray(f, dtype=float) - np.asarray(g, dtype=float)
    return sum_norm(diff.reshape(1, -1), [1.0], a, masses) ** min(1.0, a)


def as_kernel(values, masses=None, times=None, sign_class=None) -> SpectralKernel:
    """Convenience constructor from a bare matrix (unit masses, lattice times by default)."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n_t, n_s = values.shape
    space = MeasureSpace(np.ones(n_s) if masses is None else masses)
    if times is None:
        grid = TimeGrid.lattice(0, n_t - 1)
    else:
        grid = TimeGrid(times, kind=INTEGER_LATTICE if np.array_equal(
            np.asarray(times, float), np.round(times)) else REAL_GRID)
    return SpectralKernel(space, grid, values, sign_class)


def coerce_indices(time_indices: Sequence[int], n_times: int) -> np.ndarray:
    idx = np.asarray(time_indices, dtype=int).reshape(-1)
    if idx.size == 0:
        raise DimensionError("need at least one time index")
    if np.any(idx < 0) or np.any(idx >= n_times):
        raise DimensionError(f"time indices {idx.tolist()} out of range for {n_times} times")
    return idx
