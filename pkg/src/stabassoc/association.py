"""Max-associability, associated pairs and the norm-system checks built on them.

An SaS process with kernel ``f`` is max-associable iff
``f_{t1}(s) f_{t2}(s) >= 0`` for all pairs of times at every atom of
positive mass (all atoms, on a finite space).  Then ``|f|`` represents the
same SaS process and the alpha-Frechet process with kernel ``|f|`` is its
associate.  The equivalence and transfer checks in this module work at the
level of the norm functionals and are exact on finite spaces, but the
quantifier over all coefficients is only probed, so every positive verdict
is relative to the probes used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, NotMaxAssociableError, RegimeError, StabAssocError
from .integrals import (SCHEMA_VERSION, FddQuery, _gen, compare_on_probes, fdd_cdf_exponent,
                        fdd_cf_exponent, probe_set, rel_gap, simulate_max_process,
                        simulate_sum_process)
from .kernels import ParametricKernel
from .measure import (MAX, SUM, MeasureSpace, SpectralKernel, alpha_value, lalpha_metric,
                      max_integral, rho_metric, sum_integral)


@dataclass
class AssociabilityReport:
    associable: bool
    violating_pair: dict | None = None
    rectified_kernel: SpectralKernel | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "associable": self.associable,
                "violating_pair": self.violating_pair}


def check_max_associable(kernel: SpectralKernel) -> AssociabilityReport:
    """Decide the pairwise sign condition and rectify on success.

    Among the atoms carrying both a strictly positive and a strictly negative
    value, the witness is the one with the largest ``mass * max f * max(-f)``,
    reported with its most positive and most negative times.
    """
    v = kernel.values
    if kernel.is_nonnegative:
        return AssociabilityReport(True, None, kernel)
    pos = np.max(np.maximum(v, 0), axis=0)
    neg = np.max(np.maximum(-v, 0), axis=0)
    mixed = (pos > 0) & (neg > 0)
    if not np.any(mixed):
        return AssociabilityReport(True, None, kernel.rectified())
    score = np.where(mixed, kernel.masses * pos * neg, -1.0)
    j = int(np.argmax(score))
    i, k = sorted((int(np.argmax(v[:, j])), int(np.argmin(v[:, j]))))
    times = kernel.grid.times
    witness = {
        "time_indices": [i, k],
        "t_i": float(times[i]), "t_j": float(times[k]),
        "point_index": j, "point": _jsonable(kernel.space.points[j]),
        "mass": float(kernel.masses[j]),
        "values": [float(v[i, j]), float(v[k, j])],
        "product": float(v[i, j] * v[k, j]),
    }
    if kernel.space.coordinates is not None:
        witness["coordinate"] = np.asarray(kernel.space.coordinates[j], dtype=float).tolist()
    return AssociabilityReport(False, witness, None)


def _jsonable(p):
    if isinstance(p, (np.integer,)):
        return int(p)
    if isinstance(p, (np.floating,)):
        return float(p)
    return p


@dataclass(frozen=True, eq=False)
class ProcessHandle:
    """One regime's view of a kernel: simulation plus exact fdd functionals."""

    kernel: SpectralKernel
    alpha: float
    regime: str

    def simulate(self, n_samples: int, rng, **kw):
        if self.regime == SUM:
            return simulate_sum_process(self.kernel, self.alpha, n_samples, rng, **kw)
        return simulate_max_process(self.kernel, self.alpha, n_samples, rng, **kw)

    def exponent(self, query: FddQuery, thresholds=None) -> float:
        """CF exponent (sum) or joint-CDF exponent (max) of ``query``."""
        if self.regime == SUM:
            return fdd_cf_exponent(self.kernel, query, self.alpha)
        return fdd_cdf_exponent(self.kernel, query, thresholds, self.alpha)

    def scale(self, time_index: int) -> float:
        return float(self.kernel.row_norms(self.alpha)[time_index])


@dataclass(frozen=True, eq=False)
class AssociatedPair:
    sum: ProcessHandle
    max: ProcessHandle

    @property
    def kernel(self) -> SpectralKernel:
        return self.sum.kernel


def associate(kernel: SpectralKernel, alpha, rectify: bool = False) -> AssociatedPair:
    """SaS and alpha-Frechet handles driven by the same nonnegative kernel.

    With ``rectify=True`` a signed kernel is first passed through
    :func:`check_max_associable`; a failure raises
    :class:`NotMaxAssociableError` carrying the report.
    """
    a = alpha_value(alpha, SUM)
    if not kernel.is_nonnegative:
        if not rectify:
            raise RegimeError("associate needs a nonnegative kernel; rectify it first")
        report = check_max_associable(kernel)
        if not report.associable:
            raise NotMaxAssociableError("kernel is not max-associable", report)
        kernel = report.rectified_kernel
    return AssociatedPair(ProcessHandle(kernel, a, SUM), ProcessHandle(kernel, a, MAX))


# ------------------------------------------------------------ norm-system equivalence

@dataclass
class EquivalenceReport:
    sum_equal: bool
    max_equal: bool
    sum_witness: dict | None
    max_witness: dict | None
    sum_deviation: float
    max_deviation: float
    tolerance: float
    probes: list

    @property
    def agree(self) -> bool:
        return self.sum_equal == self.max_equal

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "sum_equal": self.sum_equal,
                "max_equal": self.max_equal, "agree": self.agree,
                "sum_witness": self.sum_witness, "max_witness": self.max_witness,
                "sum_deviation": self.sum_deviation, "max_deviation": self.max_deviation,
                "tolerance": self.tolerance,
                "probes": [{"times": list(i), "coeffs": list(c)} for i, c in self.probes]}


def norm_system_equivalence_test(kernel_a: SpectralKernel, kernel_b: SpectralKernel, alpha,
                                 trials: int = 32, rng=None,
                                 tol: float = 1e-9) -> EquivalenceReport:
    """Compare the linear and the max-linear norm systems of two nonnegative kernels.

    The same probes are used on both sides: signed coefficients for the
    linear combinations, their absolute values for the max-linear ones.
    For nonnegative kernels the two verdicts should always agree.
    """
    a = alpha_value(alpha, SUM)
    if kernel_a.n_times != kernel_b.n_times:
        raise DimensionError("both collections need the same number of functions")
    if not (kernel_a.is_nonnegative and kernel_b.is_nonnegative):
        raise RegimeError("the equivalence concerns nonnegative functions")
    probes = probe_set(kernel_a.n_times, trials, _gen(rng))
    sdev, swit = compare_on_probes(kernel_a, kernel_b, a, SUM, probes, tol)
    mdev, mwit = compare_on_probes(kernel_a, kernel_b, a, MAX, probes, tol)
    return EquivalenceReport(swit is None, mwit is None, swit, mwit, sdev, mdev, tol, probes)


def isometric_copy(kernel: SpectralKernel, alpha, rng, split: bool = True) -> SpectralKernel:
    """A kernel with the same linear and max-linear norm systems on another space.

    Composes a random permutation of the atoms, a mass rescaling
    ``mu'_j = c_j mu_j`` with rows scaled by ``c_j^(-1/alpha)``, and (when
    ``split``) the splitting of one atom into two with the same values and
    masses summing to the original.
    """
    a = alpha_value(alpha)
    gen = _gen(rng)
    m = kernel.n_points
    perm = gen.permutation(m)
    c = gen.uniform(0.5, 2.0, size=m)
    masses = kernel.masses[perm] * c
    values = kernel.values[:, perm] * c ** (-1 / a)
    if split and m:
        j = int(gen.integers(m))
        frac = gen.uniform(0.2, 0.8)
        masses = np.concatenate((masses, [masses[j] * (1 - frac)]))
        masses[j] *= frac
        values = np.concatenate((values, values[:, [j]]), axis=1)
    return SpectralKernel(MeasureSpace(masses), kernel.grid, values)


PERTURBATIONS = ("scale_row", "swap_in_row", "bump_entry")


def perturbed_copy(kernel: SpectralKernel, rng, mode: str = "scale_row") -> SpectralKernel:
    """A kernel differing from ``kernel`` in one row (see :data:`PERTURBATIONS`).

    ``scale_row`` multiplies a row by a factor in ``[1.5, 3]``; ``swap_in_row``
    exchanges the values of one row at two atoms; ``bump_entry`` multiplies
    one entry by a factor in ``[1.5, 3]`` (or sets a zero entry to the row
    maximum).
    """
    gen = _gen(rng)
    v = np.array(kernel.values)
    i = int(gen.integers(kernel.n_times))
    if mode == "scale_row":
        v[i] *= gen.uniform(1.5, 3.0)
    elif mode == "swap_in_row":
        if kernel.n_points < 2:
            raise StabAssocError("swap_in_row needs at least two atoms")
        p, q = gen.choice(kernel.n_points, size=2, replace=False)
        v[i, [p, q]] = v[i, [q, p]]
    elif mode == "bump_entry":
        j = int(gen.integers(kernel.n_points))
        v[i, j] = v[i, j] * gen.uniform(1.5, 3.0) if v[i, j] > 0 else max(1.0, v[i].max())
    else:
        raise StabAssocError(f"unknown perturbation {mode!r}")
    return SpectralKernel(kernel.space, kernel.grid, v)


# ------------------------------------------------------------ stationarity

@dataclass
class TransferReport:
    """Verdicts of a shift or scaling check on both regimes."""

    sum_ok: bool
    max_ok: bool | None
    sum_deviation: float
    max_deviation: float | None
    tolerance: float
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sum_ok = bool(self.sum_ok)
        self.sum_deviation = float(self.sum_deviation)
        self.tolerance = float(self.tolerance)
        if self.max_ok is not None:
            self.max_ok = bool(self.max_ok)
            self.max_deviation = float(self.max_deviation)
        self.details = {k: (float(v) if isinstance(v, np.floating) else v)
                        for k, v in self.details.items()}

    @property
    def agree(self) -> bool:
        return self.max_ok is None or self.sum_ok == self.max_ok

    @property
    def ok(self) -> bool:
        return self.sum_ok and self.max_ok is not False

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "sum_ok": self.sum_ok, "max_ok": self.max_ok,
                "sum_deviation": self.sum_deviation, "max_deviation": self.max_deviation,
                "tolerance": self.tolerance, "witness": self.witness, **self.details}


def _window_probes(lo: int, hi: int, trials: int, gen) -> list[tuple]:
    width = hi - lo + 1
    return [(tuple(i + lo for i in idx), c) for idx, c in probe_set(width, trials, gen)]


def check_stationarity(kernel: SpectralKernel, alpha, shifts, probes=None, trials: int = 16,
                       rng=None, tol: float = 1e-9) -> TransferReport:
    """Compare the norm functionals at ``(t_j)`` and ``(t_j + h)`` for grid shifts ``h``.

    ``probes`` is a list of ``(time_indices, coeffs)``; by default unit,
    all-ones, pair and random probes are drawn on the largest window that
    every shift keeps inside the grid.  The max-side verdict is ``None`` for
    signed kernels.
    """
    a = alpha_value(alpha, SUM)
    shifts = [int(h) for h in shifts]
    n = kernel.n_times
    if not shifts:
        raise StabAssocError("need at least one shift")
    lo, hi = max(0, -min(shifts)), n - 1 - max(0, max(shifts))
    if probes is None:
        if lo > hi:
            raise DimensionError("shifts leave no window inside the grid")
        probes = _window_probes(lo, hi, trials, _gen(rng))
    else:
        probes = [(tuple(int(i) for i in idx), tuple(float(x) for x in c)) for idx, c in probes]
    for idx, _ in probes:
        for h in shifts:
            if min(idx) + h < 0 or max(idx) + h >= n:
                raise DimensionError(f"shift {h} moves probe {list(idx)} out of the grid")
    do_max = kernel.is_nonnegative
    worst_s, worst_m, witness = 0.0, 0.0, None
    for idx, c in probes:
        base = kernel.values[list(idx)]
        s0 = sum_integral(base, c, a, kernel.masses) ** (1 / a)
        m0 = max_integral(base, np.abs(c), a, kernel.masses) ** (1 / a) if do_max else None
        for h in shifts:
            moved = kernel.values[[i + h for i in idx]]
            gs = rel_gap(s0, sum_integral(moved, c, a, kernel.masses) ** (1 / a))
            gm = 0.0
            if do_max:
                gm = rel_gap(m0, max_integral(moved, np.abs(c), a, kernel.masses) ** (1 / a))
            if (gs > tol or gm > tol) and witness is None:
                witness = {"time_indices": list(idx), "coeffs": list(c), "shift": h,
                           "sum_gap": gs, "max_gap": gm if do_max else None}
            worst_s, worst_m = max(worst_s, gs), max(worst_m, gm)
    return TransferReport(worst_s <= tol, (worst_m <= tol) if do_max else None,
                          worst_s, worst_m if do_max else None, tol, witness,
                          {"n_probes": len(probes), "shifts": shifts})


# ------------------------------------------------------------ self-similarity

def _probe_norms(kernel, probes, alpha, regime):
    out = []
    for idx, c in probes:
        rows = kernel.values[list(idx)]
        if regime == SUM:
            out.append(sum_integral(rows, c, alpha, kernel.masses) ** (1 / alpha))
        else:
            out.append(max_integral(rows, np.abs(c), alpha, kernel.masses) ** (1 / alpha))
    return np.array(out)


def check_self_similarity(family: ParametricKernel, H: float, alpha, scale_factors, times,
                          probes=None, trials: int = 8, rng=None,
                          tol: float | None = None) -> TransferReport:
    """Check ``||sum_j c_j f_{a t_j}|| = a^H ||sum_j c_j f_{t_j}||`` on the quadrature.

    Both the linear and (for nonnegative families) the max-linear functional
    are checked.  The default tolerance is ten times the quadrature
    self-error, measured as the largest relative change of the probe norms
    when the family's quadrature is refined once (factor 2).
    """
    if not isinstance(family, ParametricKernel):
        raise StabAssocError("self-similarity needs a parametric kernel family")
    a = alpha_value(alpha, SUM)
    times = np.asarray(times, dtype=float).reshape(-1)
    scale_factors = [float(s) for s in scale_factors]
    if any(s <= 0 for s in scale_factors):
        raise StabAssocError("scale factors must be positive")
    if probes is None:
        probes = probe_set(times.size, trials, _gen(rng))
    base = family.evaluate(times)
    do_max = base.is_nonnegative
    regimes = (SUM, MAX) if do_max else (SUM,)
    base_norms = {r: _probe_norms(base, probes, a, r) for r in regimes}
    fine = family.refined(2).evaluate(times) if family.family not in (
        "mixed_moving_average", "moving_maxima", "constant") else base
    self_err = 0.0
    for r in regimes:
        fn = _probe_norms(fine, probes, a, r)
        self_err = max(self_err, max(rel_gap(x, y) for x, y in zip(base_norms[r], fn)))
    if tol is None:
        tol = max(10 * self_err, 1e-12)
    dev = {r: 0.0 for r in regimes}
    witness = None
    for s in scale_factors:
        scaled = family.evaluate(s * times)
        for r in regimes:
            got = _probe_norms(scaled, probes, a, r)
            want = s ** H * base_norms[r]
            for k, (x, y) in enumerate(zip(got, want)):
                g = rel_gap(x, y)
                dev[r] = max(dev[r], g)
                if g > tol and witness is None:
                    witness = {"scale": s, "regime": r, "probe": list(probes[k][0]),
                               "coeffs": list(probes[k][1]), "scaled_norm": float(x),
                               "expected": float(y)}
    return TransferReport(dev[SUM] <= tol, (dev[MAX] <= tol) if do_max else None,
                          dev[SUM], dev.get(MAX), tol, witness,
                          {"self_error": self_err, "H": H, "scale_factors": scale_factors})


# ------------------------------------------------------------ convergence

@dataclass
class ConvergenceDistances:
    sum_distances: np.ndarray
    max_distances: np.ndarray | None


def lalpha_distance(kernel: SpectralKernel, t_index: int, sequence, alpha) -> ConvergenceDistances:
    """Distances of ``f_{t_n}`` to ``f_t`` along a sequence of row indices.

    Sum side: ``||f_{t_n} - f_t||_alpha ** min(1, alpha)``.  Max side (for
    nonnegative kernels): ``rho(f_{t_n}, f_t) = int |f_{t_n}^alpha - f_t^alpha| dmu``.
    ``X_{t_n} -> X_t`` in probability iff the first sequence vanishes, and
    ``Y_{t_n} -> Y_t`` iff the second does.
    """
    a = alpha_value(alpha)
    n = kernel.n_times
    seq = [int(i) for i in sequence]
    if not 0 <= t_index < n or any(not 0 <= i < n for i in seq):
        raise DimensionError("row indices out of range")
    f = kernel.values[t_index]
    m = kernel.masses
    s = np.array([lalpha_metric(kernel.values[i], f, a, m) for i in seq])
    mx = None
    if kernel.is_nonnegative:
        mx = np.array([rho_metric(kernel.values[i], f, a, m) for i in seq])
    return ConvergenceDistances(s, mx)
