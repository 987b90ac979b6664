"""Conservative/dissipative and positive/null classification of kernel atoms.

An atom ``s`` is conservative when ``int_T |f_t(s)|^alpha lambda(dt)``
diverges, and positive when ``int_T w(t) |f_t(s)|^alpha lambda(dt)`` diverges
for every weight ``w`` of the class W (nondecreasing on ``t <= 0``,
nonincreasing on ``t >= 0``, divergent on both half-lines).  Divergence of an
infinite integral cannot be decided from finite data; the classifiers use a
ratio test over geometrically growing windows ``|t| <= n0 * 2^k``:

    divergent  iff  S_{n_K} / S_{n_{K-1}} > 1 + delta

where ``S_n`` is the partial integral.  This is a heuristic.  Slowly
diverging integrals (e.g. growing like ``log log n``) can be labelled
convergent, and the W quantifier is approximated by a finite weight set, so P
can be over-reported.  The partial-sum trajectories are kept in the label so a
different rule can be applied afterwards.

Labels depend on ``|f_t(s)|^alpha`` only, which is why the same labels serve
the SaS process and its associated alpha-Frechet process.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .association import ProcessHandle
from .exceptions import DimensionError, RegimeError, StabAssocError
from .integrals import SCHEMA_VERSION, _gen, extremal_integral, stable_integral
from .kernels import ParametricKernel
from .marginals import standard_frechet, standard_sas, SeededStream
from .measure import (INTEGER_LATTICE, MAX, SUM, SpectralKernel, TimeGrid, alpha_value,
                      max_integral, sum_integral)


@dataclass(frozen=True)
class WeightFunction:
    """A weight ``w(t) >= 0`` meant to belong to the class W."""

    name: str
    func: Callable = field(compare=False)

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))

    def validate(self, horizon: int = 4096, delta: float = 1e-3) -> None:
        """Numerical membership check on the lattice ``[-horizon, horizon]``.

        Nonnegativity, monotonicity on each half-line, and unbounded partial
        sums on each half-line (last doubling still adds more than ``delta``
        relative mass).
        """
        t = np.arange(0, horizon + 1, dtype=float)
        for side in (t, -t):
            w = self(side)
            if np.any(~np.isfinite(w)) or np.any(w < 0):
                raise StabAssocError(f"weight {self.name} must be finite and nonnegative")
            if np.any(np.diff(w) > 1e-15 * np.maximum(w[:-1], 1)):
                raise StabAssocError(f"weight {self.name} must decrease away from 0")
            half = np.sum(w[: horizon // 2 + 1])
            full = np.sum(w)
            if not (half > 0 and full / half > 1 + delta):
                raise StabAssocError(f"weight {self.name} looks integrable on a half-line")


W1 = WeightFunction("w1", lambda t: 1.0 / (1.0 + np.abs(t)))
W2 = WeightFunction("w2", lambda t: 1.0 / ((1.0 + np.abs(t)) * np.log(np.e + np.abs(t))))
BUILTIN_WEIGHTS = {"w1": W1, "w2": W2}


@dataclass(frozen=True)
class WindowSchedule:
    """Windows ``n0 * 2^k`` for ``k = 0..doublings`` and the ratio threshold ``delta``."""

    n0: int = 8
    doublings: int = 6
    delta: float = 0.01

    def __post_init__(self):
        if self.doublings < 3:
            raise StabAssocError("window schedule too short: need at least 3 doublings")
        if self.n0 < 1 or self.delta <= 0:
            raise StabAssocError("need n0 >= 1 and delta > 0")

    @property
    def windows(self) -> list[int]:
        return [self.n0 * 2 ** k for k in range(self.doublings + 1)]


@dataclass
class DecompositionLabel:
    """Per-atom labels with the diagnostics they were derived from.

    ``cd[j]`` is ``"C"`` or ``"D"``; ``pn[j]`` is ``"P"`` or ``"N"`` (P relative
    to the tested weights).  ``trajectories[name]`` has shape
    ``(levels, points)``; ``"unweighted"`` holds ``S_{n_k}(s)``.
    """

    points: tuple
    cd: np.ndarray | None = None
    pn: np.ndarray | None = None
    trajectories: dict = field(default_factory=dict)
    weight_verdicts: dict = field(default_factory=dict)
    schedule: WindowSchedule = None
    adjusted: int = 0

    def indices(self, label: str) -> np.ndarray:
        arr = self.cd if label in ("C", "D") else self.pn
        if arr is None:
            raise StabAssocError(f"label {label!r} was not computed")
        return np.nonzero(arr == label)[0]

    def fraction(self, label: str) -> float:
        n = len(self.points)
        return len(self.indices(label)) / n if n else 0.0

    def to_csv(self, path) -> None:
        """``point_id, CD, PN`` followed by one column per trajectory level."""
        levels = self.schedule.windows
        names = list(self.trajectories)
        header = ["point_id", "CD", "PN"]
        for name in names:
            header += [f"S_{name}_n{n}" for n in levels]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for j, p in enumerate(self.points):
                row = [p, "" if self.cd is None else self.cd[j],
                       "" if self.pn is None else self.pn[j]]
                for name in names:
                    row += [repr(float(v)) for v in self.trajectories[name][:, j]]
                w.writerow(row)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "n_points": len(self.points),
               "schedule": {"n0": self.schedule.n0, "doublings": self.schedule.doublings,
                            "delta": self.schedule.delta},
               "adjusted_labels": self.adjusted}
        for lab in ("C", "D", "P", "N"):
            arr = self.cd if lab in "CD" else self.pn
            if arr is not None:
                out[f"count_{lab}"] = int(np.sum(arr == lab))
        return out


def _window_values(source, alpha, schedule, finite_window, time_step):
    """Kernel values on the widest window, with times and lambda weights."""
    n_max = schedule.windows[-1]
    if isinstance(source, ParametricKernel):
        if time_step == 1.0:
            grid = TimeGrid.lattice(-n_max, n_max)
        else:
            grid = TimeGrid.uniform(-n_max, n_max, time_step)
        k = source.evaluate(grid)
    elif isinstance(source, SpectralKernel):
        if not finite_window:
            raise StabAssocError(
                "a fixed finite kernel needs finite_window=True: windows are then cut "
                "from its own time grid")
        k = source
    else:
        raise StabAssocError("classify needs a ParametricKernel or SpectralKernel")
    absa = np.abs(k.values) ** alpha_value(alpha)
    return k, absa, k.grid.times, k.grid.lambda_weights


def _trajectory(absa, times, lam, windows, weight=None):
    w = lam if weight is None else lam * weight(times)
    out = np.empty((len(windows), absa.shape[1]))
    for k, n in enumerate(windows):
        m = np.abs(times) <= n
        out[k] = w[m] @ absa[m]
    return out


def _diverges(traj: np.ndarray, delta: float) -> np.ndarray:
    last, prev = traj[-1], traj[-2]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(prev > 0, last / np.where(prev > 0, prev, 1.0), np.inf)
    return (last > 0) & (ratio > 1 + delta)


def _points_of(kern: SpectralKernel) -> tuple:
    return tuple(kern.space.points)


def classify_cd(kernel, alpha, schedule: WindowSchedule = WindowSchedule(),
                finite_window: bool = False, time_step: float = 1.0) -> DecompositionLabel:
    """Label every atom C (divergent ``int |f_t(s)|^alpha dt``) or D.

    ``kernel`` may be a :class:`ParametricKernel`, evaluated on ``[-n, n]``
    for the largest window of the schedule (integer lattice, or a real grid
    of step ``time_step``), or a fixed :class:`SpectralKernel` together with
    ``finite_window=True``, in which case windows are cut from its own grid.
    """
    k, absa, times, lam = _window_values(kernel, alpha, schedule, finite_window, time_step)
    traj = _trajectory(absa, times, lam, schedule.windows)
    div = _diverges(traj, schedule.delta)
    cd = np.where(div, "C", "D")
    return DecompositionLabel(_points_of(k), cd=cd, trajectories={"unweighted": traj},
                              schedule=schedule)


def classify_pn(kernel, alpha, weights: Sequence[WeightFunction] = (W1, W2),
                schedule: WindowSchedule = WindowSchedule(), finite_window: bool = False,
                time_step: float = 1.0, validate_weights: bool = True) -> DecompositionLabel:
    """Label every atom P (weighted integrals diverge for all tested weights) or N."""
    weights = [BUILTIN_WEIGHTS[w] if isinstance(w, str) else w for w in weights]
    if not weights:
        raise StabAssocError("need at least one weight function")
    if validate_weights:
        for w in weights:
            w.validate()
    k, absa, times, lam = _window_values(kernel, alpha, schedule, finite_window, time_step)
    trajectories, verdicts = {}, {}
    positive = np.ones(absa.shape[1], dtype=bool)
    for w in weights:
        traj = _trajectory(absa, times, lam, schedule.windows, w)
        trajectories[w.name] = traj
        verdicts[w.name] = _diverges(traj, schedule.delta)
        positive &= verdicts[w.name]
    pn = np.where(positive, "P", "N")
    return DecompositionLabel(_points_of(k), pn=pn, trajectories=trajectories,
                              weight_verdicts=verdicts, schedule=schedule)


def classify(kernel, alpha, weights=(W1, W2), schedule: WindowSchedule = WindowSchedule(),
             finite_window: bool = False, time_step: float = 1.0,
             validate_weights: bool = True) -> DecompositionLabel:
    """Both partitions, with the inclusions ``D subset N`` and ``P subset C`` enforced.

    For even weights bounded by 1 the ratio test already implies both
    inclusions; for other weights any atom labelled P but D is relabelled N
    and counted in ``adjusted``.
    """
    cd = classify_cd(kernel, alpha, schedule, finite_window, time_step)
    pn = classify_pn(kernel, alpha, weights, schedule, finite_window, time_step,
                     validate_weights)
    bad = (cd.cd == "D") & (pn.pn == "P")
    labels = np.where(bad, "N", pn.pn)
    return DecompositionLabel(cd.points, cd.cd, labels,
                              {**cd.trajectories, **pn.trajectories}, pn.weight_verdicts,
                              schedule, int(np.sum(bad)))


# ------------------------------------------------------------ components

def extract_component(kernel: SpectralKernel, subset, alpha, regime: str = SUM) -> ProcessHandle:
    """Process driven by the random (sup-)measure restricted to ``subset``.

    An empty subset gives the degenerate zero process.
    """
    a = alpha_value(alpha, regime)
    idx = np.asarray(list(subset), dtype=int).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= kernel.n_points):
        raise DimensionError("subset indices outside the measure space")
    if idx.size != np.unique(idx).size:
        raise StabAssocError("subset lists an atom twice")
    if regime == MAX and not kernel.is_nonnegative:
        raise RegimeError("max-regime components need a nonnegative kernel")
    return ProcessHandle(kernel.restrict_points(np.sort(idx)), a, regime)


def _check_partition(partition, n_points):
    parts = [np.asarray(list(p), dtype=int).reshape(-1) for p in partition]
    allidx = np.concatenate(parts) if parts else np.array([], dtype=int)
    if allidx.size != np.unique(allidx).size:
        raise StabAssocError("partition parts overlap")
    if allidx.size != n_points or (allidx.size and (allidx.min() < 0 or allidx.max() >= n_points)):
        raise StabAssocError("partition does not cover the measure space")
    return parts


@dataclass
class FactorizationReport:
    ok: bool
    max_rel_gap: float
    tolerance: float
    witness: dict | None
    n_probes: int


def factorization_check(kernel: SpectralKernel, partition, alpha, regime: str = SUM,
                        probes=None, trials: int = 32, rng=None,
                        tol: float = 1e-12) -> FactorizationReport:
    """Exponent additivity across a partition of the atoms.

    For every probe the whole-space exponent (CF exponent in the sum regime,
    joint-CDF exponent in the max regime with ``1/threshold`` given by the
    absolute coefficients) must equal the sum of the exponents over the
    parts.  This is the exact functional form of independence of the
    component processes.
    """
    a = alpha_value(alpha, regime)
    parts = _check_partition(partition, kernel.n_points)
    if regime == MAX and not kernel.is_nonnegative:
        raise RegimeError("max-regime factorization needs a nonnegative kernel")
    if probes is None:
        from .integrals import probe_set
        probes = probe_set(kernel.n_times, trials, _gen(rng))
    integral = sum_integral if regime == SUM else max_integral
    worst, witness = 0.0, None
    for idx, c in probes:
        c = np.asarray(c, dtype=float)
        if regime == MAX:
            c = np.abs(c)
        rows = kernel.values[list(idx)]
        whole = integral(rows, c, a, kernel.masses)
        pieces = [integral(rows[:, p], c, a, kernel.masses[p]) for p in parts]
        total = math.fsum(pieces)
        scale = max(abs(whole), abs(total))
        g = 0.0 if scale == 0 else abs(whole - total) / scale
        worst = max(worst, g)
        if g > tol and witness is None:
            witness = {"time_indices": list(idx), "coeffs": c.tolist(),
                       "whole": whole, "parts": pieces}
    return FactorizationReport(witness is None, worst, tol, witness, len(probes))


def chi2_independence(x, y, bins: int = 4) -> float:
    """p-value of a chi-square test of independence on a quantile-binned table."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    qs = np.linspace(0, 1, bins + 1)[1:-1]
    bx = np.searchsorted(np.quantile(x, qs), x, side="right")
    by = np.searchsorted(np.quantile(y, qs), y, side="right")
    table = np.zeros((bins, bins))
    np.add.at(table, (bx, by), 1)
    table = table[table.sum(1) > 0][:, table.sum(0) > 0]
    if min(table.shape) < 2:
        return 1.0
    return float(stats.chi2_contingency(table, correction=False)[1])


def component_paths(kernel: SpectralKernel, partition, alpha, regime: str, n_samples: int,
                    rng) -> list[np.ndarray]:
    """Jointly simulate the component processes of a partition.

    One atom vector is drawn for the whole space; component ``j`` integrates
    the kernel over the atoms in part ``j`` only, so the components add up
    (sum regime) or max up (max regime) to the full process pathwise.
    """
    a = alpha_value(alpha, regime)
    parts = _check_partition(partition, kernel.n_points)
    gen = rng.generator() if isinstance(rng, SeededStream) else _gen(rng)
    m, n = kernel.n_points, int(n_samples)
    scales = kernel.masses ** (1 / a)
    if regime == SUM:
        atoms = standard_sas(a, n * m, gen).reshape(n, m) * scales
        integ = stable_integral
    else:
        if not kernel.is_nonnegative:
            raise RegimeError("max-regime components need a nonnegative kernel")
        atoms = standard_frechet(a, n * m, gen).reshape(n, m) * scales
        integ = extremal_integral
    return [integ(kernel.values[:, p], atoms[:, p]) for p in parts]


def component_independence(kernel: SpectralKernel, partition, alpha, regime: str,
                           n_samples: int, rng, time_index: int = 0, bins: int = 4) -> list:
    """Chi-square p-values for every pair of simulated components at one time."""
    paths = component_paths(kernel, partition, alpha, regime, n_samples, rng)
    out = []
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            out.append(((i, j), chi2_independence(paths[i][:, time_index],
                                                  paths[j][:, time_index], bins)))
    return out
