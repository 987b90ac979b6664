"""Stable and extremal integrals over finite measure spaces.

On a finite space the stable integral is ``sum_j f(s_j) Z_j`` with
independent SaS atoms ``Z_j`` of scale ``mu_j^(1/alpha)``, and the extremal
integral is ``max_j f(s_j) W_j`` with independent alpha-Frechet atoms of the
same scales.  Both are exact, so sampled paths have exactly the joint law of
the integral representation; there is no series truncation anywhere.

Sampling is done in fixed-size blocks, block ``b`` drawing its atoms from
``stream.generator(b)``.  The output therefore does not depend on how many
workers are used.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, RegimeError, StabAssocError
from .marginals import FrechetLaw, SeededStream, standard_frechet, standard_sas
from .measure import (MAX, SUM, SpectralKernel, alpha_value, coerce_indices,
                      max_integral, sum_integral)

BLOCK_SIZE = 4096
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class FddQuery:
    """A finite-dimensional query: times (as grid indices), coefficients, regime."""

    time_indices: tuple
    coeffs: tuple
    regime: str = SUM

    def __post_init__(self):
        idx = tuple(int(i) for i in np.asarray(self.time_indices).reshape(-1))
        coeffs = tuple(float(c) for c in np.asarray(self.coeffs, dtype=float).reshape(-1))
        if len(idx) != len(coeffs):
            raise DimensionError(f"{len(idx)} times but {len(coeffs)} coefficients")
        if self.regime not in (SUM, MAX):
            raise StabAssocError(f"unknown regime {self.regime!r}")
        if self.regime == MAX and any(c < 0 for c in coeffs):
            raise RegimeError("max-regime queries need nonnegative coefficients")
        object.__setattr__(self, "time_indices", idx)
        object.__setattr__(self, "coeffs", coeffs)

    def rows(self, kernel: SpectralKernel) -> np.ndarray:
        return kernel.values[coerce_indices(self.time_indices, kernel.n_times)]


def fdd_cf_exponent(kernel: SpectralKernel, query: FddQuery, alpha) -> float:
    """Exponent of the joint CF: ``int_S |sum_j a_j f_{t_j}|^alpha dmu``.

    ``E exp(i sum_j a_j X_{t_j}) = exp(-result)``.
    """
    a = alpha_value(alpha, SUM)
    if query.regime != SUM:
        raise RegimeError("fdd_cf_exponent needs a sum-regime query")
    return sum_integral(query.rows(kernel), query.coeffs, a, kernel.masses)


def fdd_cdf_exponent(kernel: SpectralKernel, query: FddQuery, thresholds, alpha) -> float:
    """Exponent of the joint CDF: ``int_S (max_j f_{t_j}/a_j)^alpha dmu``.

    ``P(Y_{t_1} <= a_1, ..., Y_{t_n} <= a_n) = exp(-result)``.  ``thresholds``
    may contain ``inf`` (that time is unconstrained).  With ``thresholds=None``
    the query coefficients ``c_j`` are read as ``1/a_j``, which is the
    exponent of ``P(max_j c_j Y_{t_j} <= 1)``.
    """
    a = alpha_value(alpha, MAX)
    if query.regime != MAX:
        raise RegimeError("fdd_cdf_exponent needs a max-regime query")
    if thresholds is None:
        inv = np.asarray(query.coeffs, dtype=float)
    else:
        th = np.asarray(thresholds, dtype=float).reshape(-1)
        if th.size != len(query.time_indices):
            raise DimensionError("one threshold per query time is required")
        if np.any(~(th > 0)):
            raise StabAssocError("thresholds must be strictly positive")
        inv = 1.0 / th
    return max_integral(query.rows(kernel), inv, a, kernel.masses)


# ---------------------------------------------------------------- simulation

def _block_ranges(n: int):
    return [(b, s, min(s + BLOCK_SIZE, n)) for b, s in enumerate(range(0, n, BLOCK_SIZE))]


def _sum_block(values, scales, alpha, gen, size):
    z = standard_sas(alpha, size * scales.size, gen).reshape(size, scales.size) * scales
    return z, z @ values.T


def _max_block(values, scales, alpha, gen, size):
    w = standard_frechet(alpha, size * scales.size, gen).reshape(size, scales.size) * scales
    return w, extremal_integral(values, w)


def stable_integral(values, atoms) -> np.ndarray:
    """Pathwise ``X_t = sum_j values[t, j] * atoms[k, j]`` for every sample ``k``."""
    return np.asarray(atoms) @ np.asarray(values).T


def extremal_integral(values, atoms) -> np.ndarray:
    """Pathwise ``Y_t = max_j values[t, j] * atoms[k, j]``."""
    values = np.asarray(values, dtype=float)
    atoms = np.asarray(atoms, dtype=float)
    out = np.zeros((atoms.shape[0], values.shape[0]))
    if values.shape[1] == 0:
        return out
    for i, row in enumerate(values):
        out[:, i] = np.max(atoms * row, axis=1)
    return out


def _simulate(kernel, alpha, n_samples, rng, regime, workers, keep_atoms):
    n = int(n_samples)
    if n < 1:
        raise StabAssocError("n_samples must be at least 1")
    scales = kernel.masses ** (1 / alpha)
    block = _sum_block if regime == SUM else _max_block
    values = kernel.values
    if isinstance(rng, np.random.Generator):
        atoms, paths = block(values, scales, alpha, rng, n)
        return paths, (atoms if keep_atoms else None), None
    if not isinstance(rng, SeededStream):
        raise StabAssocError("rng must be a SeededStream or numpy Generator")

    def run(item):
        b, lo, hi = item
        return block(values, scales, alpha, rng.generator(b), hi - lo)

    items = _block_ranges(n)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, items))
    else:
        results = [run(it) for it in items]
    paths = np.concatenate([r[1] for r in results], axis=0)
    atoms = np.concatenate([r[0] for r in results], axis=0) if keep_atoms else None
    return paths, atoms, rng.record()


@dataclass(frozen=True, eq=False)
class SamplePaths:
    """Monte-Carlo draws ``draws[k, i] = X_{t_i}`` (or ``Y_{t_i}``) of a kernel's process."""

    kernel: SpectralKernel
    draws: np.ndarray
    regime: str
    alpha: float
    seed_record: dict | None = None
    atoms: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_samples(self) -> int:
        return self.draws.shape[0]

    def column(self, time_index: int) -> np.ndarray:
        return self.draws[:, time_index]

    def to_csv(self, path) -> None:
        """Long format: ``sample_id, t, value``."""
        times = self.kernel.grid.times
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample_id", "t", "value"])
            for k, row in enumerate(self.draws):
                for t, v in zip(times, row):
                    w.writerow([k, repr(float(t)), repr(float(v))])

    def summary(self, probs=(0.05, 0.25, 0.5, 0.75, 0.95),
                thetas=tuple(np.linspace(-3, 3, 13))) -> dict:
        """Per-time empirical quantiles next to the exact marginal functionals.

        Max regime: the empirical CDF is evaluated at the exact quantiles of
        ``Frechet(||f_t||, alpha)``.  Sum regime: the empirical CF (cosine
        average) is compared with ``exp(-||f_t||^alpha |theta|^alpha)`` on a
        theta grid.  ``max_gap`` is the largest absolute discrepancy.
        """
        norms = self.kernel.row_norms(self.alpha)
        per_time = []
        gap = 0.0
        for i, t in enumerate(self.kernel.grid.times):
            x = self.draws[:, i]
            entry = {
                "t": float(t),
                "scale": float(norms[i]),
                "exponent": float(norms[i] ** self.alpha),
                "empirical_quantiles": {repr(p): float(q) for p, q in
                                        zip(probs, np.quantile(x, probs))},
            }
            if norms[i] == 0:
                entry["gap"] = float(np.max(np.abs(x)))
            elif self.regime == MAX:
                exact_q = FrechetLaw(float(norms[i]), self.alpha)
                qs = exact_q.sigma * (-np.log(np.asarray(probs))) ** (-1 / self.alpha)
                emp = np.array([np.mean(x <= q) for q in qs])
                entry["exact_quantiles"] = {repr(p): float(q) for p, q in zip(probs, qs)}
                entry["gap"] = float(np.max(np.abs(emp - np.asarray(probs))))
            else:
                th = np.asarray(thetas)
                emp = np.array([np.mean(np.cos(v * x)) for v in th])
                exact = np.exp(-(norms[i] * np.abs(th)) ** self.alpha)
                entry["gap"] = float(np.max(np.abs(emp - exact)))
            gap = max(gap, entry["gap"])
            per_time.append(entry)
        return {
            "schema_version": SCHEMA_VERSION,
            "regime": self.regime,
            "alpha": self.alpha,
            "n_samples": self.n_samples,
            "seed": self.seed_record,
            "gap_kind": "cdf" if self.regime == MAX else "cf",
            "max_gap": gap,
            "times": per_time,
        }

    def write_summary(self, path, **kw) -> dict:
        s = self.summary(**kw)
        with open(path, "w") as fh:
            json.dump(s, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return s


def simulate_sum_process(kernel: SpectralKernel, alpha, n_samples: int, rng,
                         workers: int = 1, keep_atoms: bool = False) -> SamplePaths:
    """Draw ``n_samples`` joint paths of ``X_t = int f_t dM``.

    Every sample uses one atom vector ``Z`` shared by all times, which is the
    exact joint law of the representation.
    """
    a = alpha_value(alpha, SUM)
    paths, atoms, rec = _simulate(kernel, a, n_samples, rng, SUM, workers, keep_atoms)
    return SamplePaths(kernel, paths, SUM, a, rec, atoms)


def simulate_max_process(kernel: SpectralKernel, alpha, n_samples: int, rng,
                         workers: int = 1, keep_atoms: bool = False) -> SamplePaths:
    """Draw ``n_samples`` joint paths of the extremal integral ``Y_t``.

    Raises :class:`RegimeError` for kernels with negative entries.
    """
    a = alpha_value(alpha, MAX)
    if not kernel.is_nonnegative:
        raise RegimeError("extremal integrals need a nonnegative kernel")
    paths, atoms, rec = _simulate(kernel, a, n_samples, rng, MAX, workers, keep_atoms)
    return SamplePaths(kernel, paths, MAX, a, rec, atoms)


# ------------------------------------------------------------ fdd comparison

def probe_set(n_times: int, trials: int, gen: np.random.Generator,
              pairs: bool | None = None) -> list[tuple]:
    """Structured plus random ``(time_indices, signed_coeffs)`` probes.

    Unit vectors at every time, the all-ones vector over all times, every
    pair ``(i, j)`` with coefficients ``(1, -1)`` (by default only when there
    are at most 32 times), then ``trials`` random subsets with standard
    Cauchy coefficients.
    """
    probes = [((i,), (1.0,)) for i in range(n_times)]
    probes.append((tuple(range(n_times)), (1.0,) * n_times))
    if pairs is None:
        pairs = n_times <= 32
    if pairs:
        probes.extend(((i, j), (1.0, -1.0)) for i in range(n_times) for j in range(i + 1, n_times))
    for _ in range(int(trials)):
        k = int(gen.integers(1, n_times + 1))
        idx = np.sort(gen.choice(n_times, size=k, replace=False))
        c = gen.standard_cauchy(size=k)
        probes.append((tuple(int(i) for i in idx), tuple(float(x) for x in c)))
    return probes


def rel_gap(x: float, y: float) -> float:
    scale = max(abs(x), abs(y))
    return 0.0 if scale == 0 else abs(x - y) / scale


def _norm(kernel, idx, coeffs, alpha, regime):
    rows = kernel.values[list(idx)]
    if regime == SUM:
        return sum_integral(rows, coeffs, alpha, kernel.masses) ** (1 / alpha)
    return max_integral(rows, np.abs(coeffs), alpha, kernel.masses) ** (1 / alpha)


@dataclass
class FddEqualityReport:
    """Outcome of a probe-based fdd comparison; ``equal`` is probe-relative, not a proof."""

    equal: bool
    regime: str
    tolerance: float
    max_rel_deviation: float
    witness: dict | None
    probes: list

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "verdict": "consistent" if self.equal else "different",
            "equal": self.equal,
            "regime": self.regime,
            "tolerance": self.tolerance,
            "max_rel_deviation": self.max_rel_deviation,
            "witness": self.witness,
            "n_probes": len(self.probes),
            "probes": [{"times": list(i), "coeffs": list(c)} for i, c in self.probes],
        }


def compare_on_probes(kernel1, kernel2, alpha, regime, probes, tol):
    worst, witness = 0.0, None
    for idx, c in probes:
        n1 = _norm(kernel1, idx, c, alpha, regime)
        n2 = _norm(kernel2, idx, c, alpha, regime)
        g = rel_gap(n1, n2)
        if g > worst:
            worst = g
        if g > tol and witness is None:
            coeffs = list(c) if regime == SUM else [abs(x) for x in c]
            witness = {"time_indices": list(idx),
                       "times": [float(kernel1.grid.times[i]) for i in idx],
                       "coeffs": coeffs, "norm1": n1, "norm2": n2, "rel_gap": g}
    return worst, witness


def fdd_equal(kernel1: SpectralKernel, kernel2: SpectralKernel, alpha, regime: str = SUM,
              trials: int = 64, rng=None, tol: float = 1e-9) -> FddEqualityReport:
    """Randomized test of equality of the norm functionals of two kernels.

    For the sum regime the probes compare ``||sum_j a_j f_{t_j}||`` on both
    spaces, for the max regime ``||max_j |a_j| f_{t_j}||``.  A relative
    discrepancy above ``tol`` on any probe gives ``equal=False`` with a
    witness; otherwise the kernels are reported consistent on the probes.
    """
    a = alpha_value(alpha, regime)
    if kernel1.n_times != kernel2.n_times:
        raise DimensionError("kernels must share the time grid length")
    if regime == MAX and not (kernel1.is_nonnegative and kernel2.is_nonnegative):
        raise RegimeError("max-regime comparison needs nonnegative kernels")
    gen = _gen(rng)
    probes = probe_set(kernel1.n_times, trials, gen)
    worst, witness = compare_on_probes(kernel1, kernel2, a, regime, probes, tol)
    return FddEqualityReport(witness is None, regime, tol, worst, witness, probes)


def _gen(rng) -> np.random.Generator:
    if rng is None:
        return SeededStream(0).generator()
    if isinstance(rng, SeededStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return SeededStream(int(rng)).generator()
    raise StabAssocError("rng must be a SeededStream, numpy Generator or integer seed")


def scale_coefficient(kernel: SpectralKernel, time_index: int, alpha) -> float:
    a = alpha_value(alpha)
    return sum_integral(kernel.values[[time_index]], [1.0], a, kernel.masses) ** (1 / a)

