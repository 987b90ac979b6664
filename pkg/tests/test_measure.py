import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stabassoc import (DimensionError, MeasureSpace, RegimeError, SpectralKernel,
                       StabAssocError, StabilityIndex, TimeGrid, as_kernel, max_norm,
                       rho_metric, sum_norm)
from stabassoc.measure import INTEGER_LATTICE, alpha_value, lalpha_metric


def brute_sum_norm(rows, coeffs, alpha, masses):
    # plain double loop, no vectorization
    total = 0.0
    for j in range(len(masses)):
        comb = 0.0
        for i in range(len(rows)):
            comb += coeffs[i] * rows[i][j]
        total += masses[j] * abs(comb) ** alpha
    return total ** (1 / alpha)


def brute_max_norm(rows, coeffs, alpha, masses):
    total = 0.0
    for j in range(len(masses)):
        m = max(coeffs[i] * rows[i][j] for i in range(len(rows)))
        total += masses[j] * m ** alpha
    return total ** (1 / alpha)


# ---------------------------------------------------------------- types

def test_stability_index_ranges():
    assert StabilityIndex(1.5).alpha == 1.5
    assert StabilityIndex(3.0, "max").alpha == 3.0
    with pytest.raises(StabAssocError):
        StabilityIndex(2.0)
    with pytest.raises(StabAssocError):
        StabilityIndex(0.0, "max")
    with pytest.raises(StabAssocError):
        StabilityIndex(1.0, "product")
    assert alpha_value(StabilityIndex(1.2)) == 1.2


def test_measure_space_rejects_bad_masses():
    with pytest.raises(StabAssocError):
        MeasureSpace([1.0, 0.0])
    with pytest.raises(StabAssocError):
        MeasureSpace([1.0, np.inf])
    with pytest.raises(StabAssocError):
        MeasureSpace([1.0, 1.0], points=["a", "a"])
    with pytest.raises(DimensionError):
        MeasureSpace([1.0, 1.0], points=["a"])


def test_time_grid_invariants():
    with pytest.raises(StabAssocError):
        TimeGrid([0.0, 0.0, 1.0])
    with pytest.raises(StabAssocError):
        TimeGrid([0.0, 0.5], [1.0, 1.0], INTEGER_LATTICE)
    g = TimeGrid.lattice(-2, 2)
    assert np.array_equal(g.lambda_weights, np.ones(5))
    assert g.index_of(1) == 3
    u = TimeGrid.uniform(0, 1, 0.25)
    assert u.size == 5


def test_kernel_shape_and_sign_class():
    space = MeasureSpace([1.0, 2.0])
    grid = TimeGrid([0.0, 1.0])
    k = SpectralKernel(space, grid, [[1, 0], [0, 1]])
    assert k.sign_class == "nonnegative"
    with pytest.raises(DimensionError):
        SpectralKernel(space, grid, [[1, 0, 0], [0, 1, 0]])
    with pytest.raises(RegimeError):
        SpectralKernel(space, grid, [[1, -1], [0, 1]], "nonnegative")
    with pytest.raises(StabAssocError):
        SpectralKernel(space, grid, [[1, np.nan], [0, 1]])
    assert k.values.flags.writeable is False


# ---------------------------------------------------------------- sum_norm

def test_sum_norm_disjoint_unit_rows():
    assert sum_norm([[1, 0], [0, 1]], [1, 1], 1.0, [1, 1]) == 2.0


def test_sum_norm_single_row():
    assert sum_norm([[1, 2]], [1], 1.0, [1, 1]) == 3.0


def test_sum_norm_zero_coeffs():
    assert sum_norm([[1, 2], [3, 4]], [0, 0], 1.5, [1, 1]) == 0.0


def test_sum_norm_dimension_error():
    with pytest.raises(DimensionError):
        sum_norm([[1, 2]], [1, 1], 1.0)
    with pytest.raises(DimensionError):
        sum_norm([[1, 2]], [1], 1.0, [1, 1, 1])


def test_sum_norm_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(20):
        rows = rng.normal(size=(4, 9))
        c = rng.normal(size=4)
        m = rng.random(9) + 0.1
        a = rng.uniform(0.3, 1.9)
        assert math.isclose(sum_norm(rows, c, a, m), brute_sum_norm(rows, c, a, m), rel_tol=1e-12)


# ---------------------------------------------------------------- max_norm

def test_max_norm_disjoint():
    assert max_norm([[1, 0], [0, 1]], [1, 1], 1.0, [1, 1]) == 2.0


def test_max_norm_pointwise_max():
    assert max_norm([[2, 1], [1, 2]], [1, 1], 1.0, [1, 1]) == 4.0


def test_max_norm_single_coefficient():
    rows = np.array([[0.5, 2.0, 1.0], [3.0, 0.0, 1.0]])
    m = np.array([1.0, 0.5, 2.0])
    c = 2.5
    assert math.isclose(max_norm(rows, [c, 0], 1.3, m), c * max_norm(rows[:1], [1], 1.3, m),
                        rel_tol=1e-12)


def test_max_norm_rejects_negatives():
    with pytest.raises(RegimeError):
        max_norm([[1, 0]], [-1], 1.0)
    with pytest.raises(RegimeError):
        max_norm([[1, -1]], [1], 1.0)


def test_max_norm_matches_brute_force():
    rng = np.random.default_rng(1)
    for _ in range(20):
        rows = rng.random((3, 7))
        c = rng.random(3)
        m = rng.random(7) + 0.1
        a = rng.uniform(0.3, 4.0)
        assert math.isclose(max_norm(rows, c, a, m), brute_max_norm(rows, c, a, m), rel_tol=1e-12)


# ---------------------------------------------------------------- rho

def test_rho_identity():
    f = np.array([0.3, 1.2, 0.0])
    assert rho_metric(f, f, 1.4) == 0.0


def test_rho_disjoint():
    assert rho_metric([1, 0], [0, 1], 1.0, [1, 1]) == 2.0


def test_rho_alpha_two():
    assert rho_metric([2], [1], 2.0, [1]) == 3.0


def test_rho_negative_input():
    with pytest.raises(RegimeError):
        rho_metric([1, -1], [1, 1], 1.0)


def test_lalpha_metric_power():
    # alpha < 1: ||f-g||_alpha^alpha = sum |f-g|^alpha
    assert math.isclose(lalpha_metric([1, 0], [0, 1], 0.5), 2.0, rel_tol=1e-14)
    # alpha >= 1: plain norm
    assert math.isclose(lalpha_metric([3, 0], [0, 4], 2.0), 5.0, rel_tol=1e-14)


# ---------------------------------------------------------------- properties

# zero or magnitudes well clear of underflow, so products of two entries stay normal
finite = st.one_of(st.just(0.0), st.floats(1e-30, 10), st.floats(-10, -1e-30))
alphas = st.floats(0.2, 1.95)


def _rows(n, m):
    return arrays(float, (n, m), elements=finite)


@settings(max_examples=60, deadline=None)
@given(rows=_rows(3, 5), c=arrays(float, 3, elements=finite), a=alphas,
       k=st.integers(-7, 7))
def test_norms_positively_homogeneous(rows, c, a, k):
    # power-of-two scales commute exactly with the combination, even under cancellation
    scale = 2.0 ** k
    base = sum_norm(rows, c, a)
    assert math.isclose(sum_norm(rows, scale * c, a), scale * base, rel_tol=1e-12, abs_tol=1e-300)
    pos, pc = np.abs(rows), np.abs(c)
    mbase = max_norm(pos, pc, a)
    assert math.isclose(max_norm(pos, scale * pc, a), scale * mbase, rel_tol=1e-12,
                        abs_tol=1e-300)


@settings(max_examples=60, deadline=None)
@given(rows=arrays(float, (3, 6), elements=st.floats(0, 10)),
       c=arrays(float, 3, elements=st.floats(0, 10)), a=st.floats(0.2, 5))
def test_max_norm_below_sum_norm(rows, c, a):
    assert max_norm(rows, c, a) <= sum_norm(rows, c, a) * (1 + 1e-12) + 1e-300


@settings(max_examples=60, deadline=None)
@given(vals=arrays(float, 4, elements=finite), c=arrays(float, 4, elements=finite),
       masses=arrays(float, 4, elements=st.floats(0.1, 3)), a=alphas)
def test_disjoint_support_additivity(vals, c, masses, a):
    rows = np.diag(vals)
    lhs = sum_norm(rows, c, a, masses) ** a
    rhs = sum(abs(c[j]) ** a * sum_norm(rows[j:j + 1], [1], a, masses) ** a for j in range(4))
    assert math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-300)
    prow, pc = np.abs(rows), np.abs(c)
    lhs = max_norm(prow, pc, a, masses) ** a
    rhs = sum(pc[j] ** a * max_norm(prow[j:j + 1], [1], a, masses) ** a for j in range(4))
    assert math.isclose(lhs, rhs, rel_tol=1e-12, abs_tol=1e-300)


@settings(max_examples=80, deadline=None)
@given(fgh=arrays(float, (3, 5), elements=st.floats(0, 10)),
       masses=arrays(float, 5, elements=st.floats(0.1, 3)), a=st.floats(0.2, 4))
def test_rho_triangle_and_symmetry(fgh, masses, a):
    f, g, h = fgh
    fg = rho_metric(f, g, a, masses)
    assert fg == rho_metric(g, f, a, masses)
    assert fg <= rho_metric(f, h, a, masses) + rho_metric(h, g, a, masses) + 1e-9 * (1 + fg)


def test_row_norms_and_restrict():
    k = as_kernel([[1.0, 2.0], [0.0, 3.0]], masses=[1.0, 2.0])
    assert np.allclose(k.row_norms(1.0), [5.0, 6.0])
    r = k.restrict_points([1])
    assert r.n_points == 1 and np.allclose(r.row_norms(1.0), [4.0, 6.0])
    empty = k.restrict_points([])
    assert empty.n_points == 0 and np.all(empty.row_norms(1.0) == 0)
