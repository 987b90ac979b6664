"""Parametric spectral kernels and the two-value structure checker.

Continuous parameter spaces (``u`` in ``R``, ``(x, u)`` in ``E x R``) are
replaced by midpoint quadratures: one atom per cell, mass equal to the cell
volume.  Builders return a :class:`~stabassoc.measure.SpectralKernel` on a
given time grid; :class:`ParametricKernel` bundles a family with a fixed
quadrature so it can be evaluated at arbitrary times (needed by the window
based classifiers and the self-similarity check) and refined.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, StabAssocError
from .measure import (INTEGER_LATTICE, NONNEGATIVE, REAL_GRID, SIGNED, MeasureSpace,
                      SpectralKernel, TimeGrid, sum_integral)

FAMILIES = ("lfsm", "telecom", "chentzov_interval", "mixed_fractional",
            "mixed_moving_average", "moving_maxima", "constant")

TAIL_TOL = 1e-6
MAX_OUTER_CELLS = 4000
VALUE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Quadrature:
    """1-d midpoint rule: cell midpoints ``nodes`` and widths ``widths``."""

    nodes: np.ndarray
    widths: np.ndarray
    cell_edges: np.ndarray | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1)
        widths = np.asarray(self.widths, dtype=float).reshape(-1)
        if nodes.size != widths.size:
            raise DimensionError("nodes and widths differ in length")
        if np.any(widths <= 0):
            raise StabAssocError("quadrature cells need positive widths")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "widths", widths)
        if self.cell_edges is not None:
            e = np.asarray(self.cell_edges, dtype=float).reshape(-1)
            if e.size != nodes.size + 1 or np.any((nodes < e[:-1]) | (nodes > e[1:])):
                raise DimensionError("every node must lie in its cell")
            object.__setattr__(self, "cell_edges", e)

    @classmethod
    def from_edges(cls, edges) -> "Quadrature":
        edges = np.asarray(edges, dtype=float)
        return cls((edges[1:] + edges[:-1]) / 2, np.diff(edges))

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "Quadrature":
        return cls.from_edges(np.linspace(lo, hi, int(n) + 1))

    @property
    def edges(self) -> np.ndarray:
        if self.cell_edges is not None:
            return self.cell_edges
        return np.concatenate(([self.nodes[0] - self.widths[0] / 2],
                               self.nodes + self.widths / 2))

    def refined(self, factor: int = 2) -> "Quadrature":
        """Split every cell into ``factor`` equal cells."""
        e = self.edges
        fine = [np.linspace(lo, hi, factor + 1)[:-1] for lo, hi in zip(e[:-1], e[1:])]
        return Quadrature.from_edges(np.concatenate(fine + [e[-1:]]))

    def __len__(self):
        return self.nodes.size


def _as_grid(times) -> TimeGrid:
    if isinstance(times, TimeGrid):
        return times
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size > 1 and np.array_equal(t, np.round(t)) and np.all(np.diff(t) == 1):
        return TimeGrid(t, kind=INTEGER_LATTICE)
    return TimeGrid(t, kind=REAL_GRID)


def _line_space(q: Quadrature) -> MeasureSpace:
    return MeasureSpace(q.widths, coordinates=q.nodes)


def _pos_pow(x, p):
    """``x_+^p`` with the convention ``0`` for ``x <= 0`` (also when ``p < 0``)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x > 0
    out[m] = x[m] ** p
    return out


# ---------------------------------------------------------------- LFSM

def lfsm_values(t, u, H, alpha, a, b):
    p = H - 1 / alpha
    return (a * (_pos_pow(t + u, p) - _pos_pow(u, p))
            + b * (_pos_pow(-(t + u), p) - _pos_pow(-u, p)))


def _lfsm_tail_bound(t, L, H, alpha, a, b):
    """Upper bound of ``int_{|u|>L} |f_t(u)|^alpha du`` for ``L > 2|t|``.

    Mean value bound ``|(v+t)^p - v^p| <= |p t| (v-|t|)^(p-1)`` on each side.
    """
    p = H - 1 / alpha
    t = abs(t)
    k = alpha * (1 - H)
    c = abs(a) ** alpha + abs(b) ** alpha
    return c * abs(p * t) ** alpha * (L - t) ** (-k) / k


def _graded_nodes(edges, singular, beta, reach):
    """Cell nodes; cells within ``reach`` of a singular point get a shifted node.

    For a cell at distances ``x1 < x2`` from the singular point the node sits
    where ``|u - p|^beta`` equals its cell average, so the leading singular
    term is integrated exactly.  Other cells use midpoints.
    """
    lo, hi = edges[:-1], edges[1:]
    nodes = (lo + hi) / 2
    for p in singular:
        for side in (1.0, -1.0):
            x1 = side * (lo - p) if side > 0 else side * (hi - p)
            x2 = side * (hi - p) if side > 0 else side * (lo - p)
            m = (x1 >= 0) & (x2 <= reach) & (x2 > x1)
            if not np.any(m):
                continue
            avg = ((x2[m] ** (1 + beta) - x1[m] ** (1 + beta))
                   / ((1 + beta) * (x2[m] - x1[m])))
            nodes[m] = p + side * avg ** (1 / beta)
    return nodes


def lfsm_quadrature(horizon: float, H: float, alpha: float, a: float, b: float,
                    n_inner: int = 400, ratio: float = 1.05, tail_tol: float = TAIL_TOL,
                    singular_points=(0.0,), depth: int = 30) -> Quadrature:
    """u-quadrature for LFSM rows with ``|t| <= horizon``.

    Uniform cells on ``[-R, R]`` with ``R = 2 * horizon``, then geometrically
    growing cells out to a window ``L`` chosen from the power-law tail bound
    so that the omitted alpha-mass of every row is below ``tail_tol`` times
    the row's alpha-norm.

    The rows behave like ``|u - p|^(H - 1/alpha)`` at ``p = 0`` and ``p = -t``;
    pass those points as ``singular_points``.  Cells are halved ``depth``
    times toward each point.  When ``H < 1/alpha`` the rows blow up there and
    the nodes of the graded cells are placed to integrate the singular power
    exactly.
    """
    horizon = float(horizon)
    if horizon <= 0:
        raise StabAssocError("horizon must be positive")
    R = 2 * horizon
    inner = Quadrature.uniform(-R, R, n_inner)
    # lower bound of ||f_horizon||^alpha from the inner region; rows scale as t^(alpha H)
    row = np.abs(lfsm_values(horizon, inner.nodes, H, alpha, a, b))
    norm_a = float(np.sum(inner.widths * row ** alpha))
    k = alpha * (1 - H)
    c = abs(a) ** alpha + abs(b) ** alpha
    p = H - 1 / alpha
    # tail(t) / ||f_t||^alpha = const * (|t| / (L - |t|))^k grows with |t|,
    # so solving at |t| = horizon covers every row
    need = c * abs(p * horizon) ** alpha / (k * tail_tol * max(norm_a, 1e-300))
    # log-space solve; the cell count is capped for tiny alpha (1 - H), in which
    # case meta["tail_ratio"] of the built kernel shows the achieved bound
    log_L = max(math.log(R * ratio), math.log(horizon) + math.log1p(
        math.exp(min(math.log(need) / k - math.log(horizon), 700.0))))
    n_out = min(MAX_OUTER_CELLS, int(math.ceil((log_L - math.log(R)) / math.log(ratio))))
    outer = R * ratio ** np.arange(n_out + 1)
    mid = np.linspace(-R, R, n_inner + 1)
    h = 2 * R / n_inner
    sing = sorted({float(s) for s in singular_points if -R < s < R})
    steps = h * 0.5 ** np.arange(1, depth + 1)
    extra = [np.array(sing)] + [s + sgn * steps for s in sing for sgn in (-1.0, 1.0)]
    inner_edges = np.unique(np.concatenate([mid] + extra))
    inner_edges = inner_edges[np.concatenate(([True], np.diff(inner_edges) > 1e-13 * h))]
    edges = np.concatenate((-outer[::-1], inner_edges[1:-1], outer))
    if p >= 0:
        # only the derivative is singular: grading alone is enough
        return Quadrature.from_edges(edges)
    nodes = _graded_nodes(edges, sing, p * alpha, h)
    return Quadrature(nodes, np.diff(edges), edges)


def build_lfsm(H: float, alpha: float, a: float, b: float, times,
               quadrature: Quadrature | None = None) -> SpectralKernel:
    """Linear fractional stable motion kernel on a u-quadrature.

    ``f_t(u) = a((t+u)_+^p - u_+^p) + b((t+u)_-^p - u_-^p)`` with
    ``p = H - 1/alpha``.  The tail bound actually achieved for each row is
    stored in ``meta["tail_ratio"]`` (omitted alpha-mass over row alpha-mass).
    """
    _check_lfsm(H, alpha, a, b)
    grid = _as_grid(times)
    horizon = max(1.0, float(np.max(np.abs(grid.times))))
    if quadrature is None:
        sing = np.concatenate(([0.0], -grid.times))
        quadrature = lfsm_quadrature(horizon, H, alpha, a, b, singular_points=sing)
    q = quadrature
    vals = np.array([lfsm_values(t, q.nodes, H, alpha, a, b) for t in grid.times])
    L = min(-q.edges[0], q.edges[-1])
    ratios = []
    for t, row in zip(grid.times, vals):
        na = sum_integral(row.reshape(1, -1), [1.0], alpha, q.widths)
        if t == 0 or na == 0 or L <= 2 * abs(t):
            ratios.append(0.0 if t == 0 else math.inf)
        else:
            ratios.append(_lfsm_tail_bound(t, L, H, alpha, a, b) / na)
    meta = {"family": "lfsm", "H": H, "alpha": alpha, "a": a, "b": b,
            "tail_ratio": max(ratios)}
    return SpectralKernel(_line_space(q), grid, vals, SIGNED, meta)


def _check_lfsm(H, alpha, a, b):
    if not 0 < alpha < 2:
        raise StabAssocError("LFSM needs 0 < alpha < 2")
    if not 0 < H < 1:
        raise StabAssocError("LFSM needs 0 < H < 1")
    if math.isclose(H, 1 / alpha, rel_tol=0, abs_tol=1e-12):
        raise StabAssocError("LFSM needs H != 1/alpha")
    if abs(a) + abs(b) <= 0:
        raise StabAssocError("LFSM needs |a| + |b| > 0")


# ---------------------------------------------------------------- Telecom

def telecom_F(z):
    """``F(z) = (min(z, 0) + 1)_+``."""
    z = np.asarray(z, dtype=float)
    return np.maximum(np.minimum(z, 0.0) + 1.0, 0.0)


def build_telecom(H: float, alpha: float, times, s_range=(-6.0, 6.0), n_s: int = 48,
                  n_u: int = 64) -> SpectralKernel:
    """Telecom process kernel ``e^{(H-1)s/alpha} (F(e^s (t+u)) - F(e^s u))``.

    Each ``s`` cell gets its own uniform u-cells covering the support
    ``[min(-t_max, 0) - e^{-s}, max(-t_min, 0)]`` of the rows, outside which
    every row vanishes.  The omitted ``s``-tails are bounded in
    ``meta["s_tail_bound"]``.
    """
    if not 1 < alpha < 2:
        raise StabAssocError("Telecom needs 1 < alpha < 2")
    if not 1 / alpha < H < 1:
        raise StabAssocError("Telecom needs 1/alpha < H < 1")
    grid = _as_grid(times)
    t_max, t_min = float(np.max(grid.times)), float(np.min(grid.times))
    sq = Quadrature.uniform(s_range[0], s_range[1], n_s)
    coords, masses, cols = [], [], []
    for s, ds in zip(sq.nodes, sq.widths):
        lo = min(-t_max, 0.0) - math.exp(-s)
        hi = max(-t_min, 0.0)
        uq = Quadrature.uniform(lo, hi, n_u)
        es = math.exp(s)
        factor = math.exp((H - 1) * s / alpha)
        block = np.array([factor * (telecom_F(es * (t + uq.nodes)) - telecom_F(es * uq.nodes))
                          for t in grid.times])
        cols.append(block)
        coords.append(np.column_stack((np.full(len(uq), s), uq.nodes)))
        masses.append(ds * uq.widths)
    vals = np.concatenate(cols, axis=1)
    t_abs = max(abs(t_max), abs(t_min))
    # s -> +inf: |row|^alpha integrates to at most |t| per unit s, times e^{(H-1)s}
    upper = t_abs * math.exp((H - 1) * s_range[1]) / (1 - H)
    # s -> -inf: at most e^{-s} (e^s |t|)^alpha per unit s, times e^{(H-1)s}
    k = alpha + H - 2
    lower = t_abs ** alpha * math.exp(k * s_range[0]) / k
    space = MeasureSpace(np.concatenate(masses), coordinates=np.concatenate(coords))
    meta = {"family": "telecom", "H": H, "alpha": alpha, "s_tail_bound": upper + lower}
    return SpectralKernel(space, grid, vals, SIGNED, meta)


# ---------------------------------------------------------------- Chentzov

def build_chentzov(times, quadrature: Quadrature) -> SpectralKernel:
    """Chentzov kernel ``1_{V_t}(u)`` with ``V_t = [min(0,t), max(0,t)]``."""
    grid = _as_grid(times)
    u = quadrature.nodes
    vals = np.array([((u >= min(0.0, t)) & (u <= max(0.0, t))).astype(float)
                     for t in grid.times])
    return SpectralKernel(_line_space(quadrature), grid, vals, NONNEGATIVE,
                          {"family": "chentzov_interval"})


def build_chentzov_sets(space: MeasureSpace, times, sets) -> SpectralKernel:
    """Chentzov kernel from user sets: ``sets[i]`` lists the atom indices in ``V_{t_i}``."""
    grid = _as_grid(times)
    if len(sets) != grid.size:
        raise DimensionError("one set per time is required")
    vals = np.zeros((grid.size, space.size))
    for i, s in enumerate(sets):
        idx = np.asarray(list(s), dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= space.size):
            raise DimensionError(f"set {i} has indices outside the space")
        vals[i, idx] = 1.0
    return SpectralKernel(space, grid, vals, NONNEGATIVE, {"family": "chentzov_sets"})


# ---------------------------------------------------------------- mixed fractional

G_SHAPES = {
    "exp": lambda x, v: np.exp(-x * v),
    "indicator": lambda x, v: (v <= x).astype(float),
    "exp_signed": lambda x, v: np.exp(-x * v) * np.cos(3 * v),
}


def build_mixed_fractional(H: float, alpha: float, g, x_nodes, x_masses, times,
                           quadrature: Quadrature) -> SpectralKernel:
    """Mixed fractional motion ``f_t(x, u) = t^{H-1/alpha} g(x, u/t)`` on ``E x R_+``.

    ``g`` is a callable ``g(x, v)`` (vectorized) or a key of :data:`G_SHAPES`.
    Times must be nonnegative; the ``t = 0`` row is zero.
    """
    if H <= 0:
        raise StabAssocError("mixed fractional motion needs H > 0")
    gfun = G_SHAPES[g] if isinstance(g, str) else g
    grid = _as_grid(times)
    if np.any(grid.times < 0):
        raise StabAssocError("mixed fractional motions are indexed by t >= 0")
    x = np.asarray(x_nodes, dtype=float).reshape(-1)
    nu = np.asarray(x_masses, dtype=float).reshape(-1)
    if x.size != nu.size:
        raise DimensionError("x_nodes and x_masses differ in length")
    if np.any(quadrature.nodes < 0):
        raise StabAssocError("u-quadrature must lie in [0, inf)")
    X, U = np.meshgrid(x, quadrature.nodes, indexing="ij")
    masses = np.outer(nu, quadrature.widths).reshape(-1)
    rows = []
    for t in grid.times:
        if t == 0:
            rows.append(np.zeros(X.size))
        else:
            rows.append((t ** (H - 1 / alpha) * gfun(X, U / t)).reshape(-1))
    space = MeasureSpace(masses, coordinates=np.column_stack((X.reshape(-1), U.reshape(-1))))
    return SpectralKernel(space, grid, np.array(rows), meta={"family": "mixed_fractional",
                                                            "H": H, "alpha": alpha})


# ---------------------------------------------------------------- moving maxima / constant

def phi_function(spec):
    """Kernel shape ``phi(k)`` from a spec dict or a callable.

    ``{"shape": "exp", "rate": r}`` gives ``exp(-r|k|)``;
    ``{"shape": "power", "power": q}`` gives ``(1+|k|)^-q``;
    ``{"shape": "table", "values": [...], "offset": o}`` tabulates ``phi(o), phi(o+1), ...``
    and is zero elsewhere.
    """
    if callable(spec):
        return spec
    shape = spec.get("shape", "exp")
    if shape == "exp":
        r = float(spec.get("rate", 1.0))
        return lambda k: np.exp(-r * np.abs(k))
    if shape == "power":
        q = float(spec.get("power", 2.0))
        return lambda k: (1.0 + np.abs(k)) ** (-q)
    if shape == "table":
        vals = np.asarray(spec["values"], dtype=float)
        off = int(spec.get("offset", 0))

        def tab(k):
            k = np.asarray(k).astype(int) - off
            inside = (k >= 0) & (k < vals.size)
            return np.where(inside, vals[np.clip(k, 0, vals.size - 1)], 0.0)
        return tab
    raise StabAssocError(f"unknown phi shape {shape!r}")


def build_moving_maxima(phi, points, times, period: int | None = None) -> SpectralKernel:
    """``f_t(s) = phi(s - t)`` on integer atoms ``points`` (unit masses).

    With ``period=m`` the offset is taken modulo ``m`` (the circular kernel on
    ``Z_m``), which makes every time shift a permutation of the atoms.
    """
    f = phi_function(phi)
    s = np.asarray(points, dtype=float).reshape(-1)
    grid = _as_grid(times)
    rows = []
    for t in grid.times:
        d = s - t
        if period is not None:
            d = np.mod(d, period)
        rows.append(f(d))
    vals = np.array(rows, dtype=float)
    space = MeasureSpace(np.ones(s.size), points=[int(v) for v in s], coordinates=s)
    return SpectralKernel(space, grid, vals, meta={"family": "moving_maxima", "period": period})


def build_constant(values, masses, times) -> SpectralKernel:
    """Time-constant kernel ``f_t = f``."""
    grid = _as_grid(times)
    f = np.asarray(values, dtype=float).reshape(-1)
    return SpectralKernel(MeasureSpace(masses), grid, np.tile(f, (grid.size, 1)),
                          meta={"family": "constant"})


# ---------------------------------------------------------------- mixed moving average

@dataclass(frozen=True, eq=False)
class TabulatedG:
    """``G(x, u)`` on a product grid: ``values[i, l] = G(x_i, u_l)``, uniform ``u``."""

    x: np.ndarray
    u: np.ndarray
    values: np.ndarray
    x_masses: np.ndarray = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        u = np.asarray(self.u, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (x.size, u.size):
            raise DimensionError(f"G values shape {v.shape} != ({x.size}, {u.size})")
        if not np.all(np.isfinite(v)):
            raise StabAssocError("G must be finite on the grid")
        nu = np.ones(x.size) if self.x_masses is None else np.asarray(self.x_masses, float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "x_masses", nu.reshape(-1))

    @property
    def du(self) -> float:
        if self.u.size < 2:
            raise DimensionError("u-grid needs at least two nodes")
        steps = np.diff(self.u)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0) or steps[0] <= 0:
            raise StabAssocError("u-grid must be uniform and increasing")
        return float(steps[0])

    @classmethod
    def from_function(cls, G, x, u, x_masses=None) -> "TabulatedG":
        X, U = np.meshgrid(np.asarray(x, float), np.asarray(u, float), indexing="ij")
        return cls(x, u, G(X, U), x_masses)

    @classmethod
    def from_csv(cls, path) -> "TabulatedG":
        """Read ``x,u,value`` rows (optional fourth column ``x_mass``)."""
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        data = np.array([[float(c) for c in r] for r in rows])
        xs = np.unique(data[:, 0])
        us = np.unique(data[:, 1])
        vals = np.full((xs.size, us.size), np.nan)
        masses = np.ones(xs.size)
        for r in data:
            i = np.searchsorted(xs, r[0])
            vals[i, np.searchsorted(us, r[1])] = r[2]
            if r.size > 3:
                masses[i] = r[3]
        if np.any(np.isnan(vals)):
            raise StabAssocError("G table must cover the full (x, u) product grid")
        return cls(xs, us, vals, masses)


def _is_number(s) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _shift_of(t: float, du: float) -> int:
    k = t / du
    if not math.isclose(k, round(k), rel_tol=0, abs_tol=1e-9):
        raise StabAssocError(f"time {t} is not a multiple of the u-spacing {du}")
    return int(round(k))


def build_mixed_moving_average(G: TabulatedG, times) -> SpectralKernel:
    """Stationary-increment kernel ``G_t(x, u) = G(x, t+u) - G(x, u)``.

    Shifts are exact index shifts on the uniform u-grid, so every time must be
    a multiple of its spacing; ``G`` is held at its boundary value beyond the
    tabulated range.  Atom ``(x_i, u_l)`` has mass ``nu_i * du``.
    """
    du = G.du
    grid = _as_grid(times)
    nu_ = G.u.size
    base = np.arange(nu_)
    rows = []
    for t in grid.times:
        k = _shift_of(t, du)
        shifted = G.values[:, np.clip(base + k, 0, nu_ - 1)]
        rows.append((shifted - G.values).reshape(-1))
    X, U = np.meshgrid(G.x, G.u, indexing="ij")
    space = MeasureSpace(np.outer(G.x_masses, np.full(nu_, du)).reshape(-1),
                         coordinates=np.column_stack((X.reshape(-1), U.reshape(-1))))
    return SpectralKernel(space, grid, np.array(rows), meta={"family": "mixed_moving_average"})


@dataclass
class TwoValueReport:
    conforms: bool
    value_sets: list
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {"conforms": self.conforms,
                "value_sets": [[float(v) for v in s] for s in self.value_sets],
                "witness": self.witness}


def _distinct_clusters(vals: np.ndarray, tol: float):
    """Group sorted values whose normalized gaps are within ``tol``; return index groups."""
    order = np.argsort(vals, kind="stable")
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    if scale == 0:
        return [order]
    normed = vals[order] / scale
    cuts = np.nonzero(np.diff(normed) > tol)[0] + 1
    return np.split(order, cuts)


def check_two_value_structure(G: TabulatedG, mask=None, tol: float = VALUE_TOL) -> TwoValueReport:
    """Check that every x-slice of ``G`` takes at most two values outside ``mask``.

    ``mask`` is a boolean array shaped like ``G.values`` marking the null set
    to ignore.  On failure the witness holds three u-nodes ``u_low, u_mid,
    u_high`` with ``G`` strictly increasing in that order, and the two times
    ``t1 = u_low - u_mid``, ``t2 = u_high - u_mid`` for which
    ``G_{t1}(x, u_mid) * G_{t2}(x, u_mid) < 0``.
    """
    vals = G.values
    if mask is None:
        mask = np.zeros(vals.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != vals.shape:
        raise DimensionError("mask must have the shape of the G table")
    value_sets, witness = [], None
    for i in range(vals.shape[0]):
        keep = np.nonzero(~mask[i])[0]
        slice_vals = vals[i, keep]
        groups = _distinct_clusters(slice_vals, tol)
        groups = [g for g in groups if g.size]
        value_sets.append([float(slice_vals[g[0]]) for g in groups])
        if len(groups) > 2 and witness is None:
            # extreme and median clusters give the most clearly separated triple
            lo, mid, hi = (int(keep[groups[k][0]]) for k in (0, len(groups) // 2, -1))
            u = G.u
            witness = {
                "x_index": i, "x": float(G.x[i]),
                "u_indices": [lo, mid, hi],
                "u": [float(u[lo]), float(u[mid]), float(u[hi])],
                "values": [float(vals[i, lo]), float(vals[i, mid]), float(vals[i, hi])],
                "t1": float(u[lo] - u[mid]), "t2": float(u[hi] - u[mid]),
            }
    return TwoValueReport(witness is None, value_sets, witness)


def witness_product(G: TabulatedG, witness: dict) -> float:
    """Feed a two-value witness back through the kernel builder.

    Returns ``G_{t1}(x, u_mid) * G_{t2}(x, u_mid)`` read off the kernel built
    by :func:`build_mixed_moving_average`; negative for a genuine witness.
    """
    t1, t2 = witness["t1"], witness["t2"]
    times = sorted((t1, t2))
    kern = build_mixed_moving_average(G, times)
    col = witness["x_index"] * G.u.size + witness["u_indices"][1]
    r1 = kern.values[times.index(t1), col]
    r2 = kern.values[times.index(t2), col]
    return float(r1 * r2)


# ---------------------------------------------------------------- parametric families

@dataclass(frozen=True, eq=False)
class ParametricKernel:
    """A kernel family with a fixed quadrature, evaluable at any times.

    ``resolution`` multiplies the number of quadrature cells; see
    :meth:`refined`.  The measure space does not depend on the evaluated
    times, so kernels evaluated at different times can be compared directly.
    """

    family: str
    params: dict = field(default_factory=dict)
    resolution: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise StabAssocError(f"unknown kernel family {self.family!r}")
        p = self.params
        if self.family == "lfsm":
            _check_lfsm(p["H"], p["alpha"], p.get("a", 1.0), p.get("b", 0.0))
        elif self.family == "telecom":
            if not (1 < p["alpha"] < 2 and 1 / p["alpha"] < p["H"] < 1):
                raise StabAssocError("Telecom needs 1 < alpha < 2 and 1/alpha < H < 1")
        elif self.family == "mixed_fractional":
            if p["H"] <= 0:
                raise StabAssocError("mixed fractional motion needs H > 0")

    def refined(self, factor: int = 2) -> "ParametricKernel":
        if self.family in ("mixed_moving_average", "moving_maxima", "constant"):
            raise StabAssocError(f"family {self.family!r} has no quadrature to refine")
        return ParametricKernel(self.family, self.params, self.resolution * int(factor))

    @property
    def nonnegative(self) -> bool:
        if self.family in ("chentzov_interval",):
            return True
        if self.family == "mixed_fractional":
            return self.params.get("g", "exp") in ("exp", "indicator")
        return False

    def quadrature(self, times=None) -> Quadrature:
        """The u-quadrature; LFSM grading also uses the singular points ``-t`` of ``times``."""
        p, r = self.params, self.resolution
        if self.family == "lfsm":
            return lfsm_quadrature(p.get("horizon", 1.0), p["H"], p["alpha"], p.get("a", 1.0),
                                   p.get("b", 0.0), n_inner=p.get("n_inner", 400) * r,
                                   singular_points=(0.0,) if times is None else
                                   np.concatenate(([0.0], -_as_grid(times).times)))
        elif self.family == "chentzov_interval":
            h = p.get("horizon", 1.0)
            q = Quadrature.uniform(-h, h, p.get("n_cells", 200))
        elif self.family == "mixed_fractional":
            q = Quadrature.uniform(0.0, p.get("u_max", 50.0), p.get("n_u", 200))
        else:
            raise StabAssocError(f"family {self.family!r} has no 1-d quadrature")
        return q if r == 1 else q.refined(r)

    def evaluate(self, times) -> SpectralKernel:
        p, f = self.params, self.family
        if f == "lfsm":
            grid = _as_grid(times)
            if "horizon" not in p:
                p = dict(p, horizon=max(1.0, float(np.max(np.abs(grid.times)))))
            pk = ParametricKernel(f, p, self.resolution)
            return build_lfsm(p["H"], p["alpha"], p.get("a", 1.0), p.get("b", 0.0), grid,
                              pk.quadrature(grid))
        if f == "telecom":
            h = p.get("horizon")
            grid = _as_grid(times)
            if h is not None and np.max(np.abs(grid.times)) > h:
                raise StabAssocError("times exceed the telecom horizon")
            return _telecom_fixed(p, grid, self.resolution)
        if f == "chentzov_interval":
            return build_chentzov(times, self.quadrature())
        if f == "mixed_fractional":
            return build_mixed_fractional(p["H"], p["alpha"], p.get("g", "exp"),
                                          p.get("x_nodes", [1.0]), p.get("x_masses", [1.0]),
                                          times, self.quadrature())
        if f == "mixed_moving_average":
            G = p["G"] if isinstance(p["G"], TabulatedG) else TabulatedG(**p["G"])
            return build_mixed_moving_average(G, times)
        if f == "moving_maxima":
            lo, hi = p.get("points", (-16, 16))
            return build_moving_maxima(p.get("phi", {"shape": "exp", "rate": 1.0}),
                                       np.arange(int(lo), int(hi) + 1), times, p.get("period"))
        return build_constant(p["values"], p.get("masses", np.ones(len(p["values"]))), times)


def _telecom_fixed(p, grid: TimeGrid, resolution: int) -> SpectralKernel:
    # the u-support depends on the time range; pin it to the horizon so the
    # atom set is the same for every evaluation
    h = float(p.get("horizon", max(1.0, float(np.max(np.abs(grid.times))))))
    pinned = np.array([-h, h])
    base = build_telecom(p["H"], p["alpha"], pinned, tuple(p.get("s_range", (-6.0, 6.0))),
                         p.get("n_s", 48) * resolution, p.get("n_u", 64) * resolution)
    H, alpha = p["H"], p["alpha"]
    s, u = base.space.coordinates[:, 0], base.space.coordinates[:, 1]
    es = np.exp(s)
    factor = np.exp((H - 1) * s / alpha)
    vals = np.array([factor * (telecom_F(es * (t + u)) - telecom_F(es * u)) for t in grid.times])
    return SpectralKernel(base.space, grid, vals, SIGNED, dict(base.meta))
