import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabassoc import (DimensionError, NotMaxAssociableError, ParametricKernel, RegimeError,
                       StabAssocError, as_kernel, associate, build_constant, build_moving_maxima,
                       check_max_associable, check_self_similarity, check_stationarity,
                       isometric_copy, lalpha_distance, perturbed_copy, sum_norm,
                       norm_system_equivalence_test)
from stabassoc.association import PERTURBATIONS
from stabassoc.integrals import probe_set
from stabassoc.measure import SpectralKernel, TimeGrid


def _random_kernel(rng, n_times=5, n_points=20):
    return as_kernel(rng.random((n_times, n_points)), rng.random(n_points) + 0.1)


# ---------------------------------------------------------------- sign condition

def test_nonnegative_kernel_returns_itself():
    k = as_kernel([[1.0, 2.0], [0.0, 3.0]])
    rep = check_max_associable(k)
    assert rep.associable and rep.rectified_kernel is k and rep.violating_pair is None


def test_opposite_signs_give_witness_at_second_point():
    k = as_kernel([[1.0, -1.0], [1.0, 1.0]])
    rep = check_max_associable(k)
    assert not rep.associable and rep.rectified_kernel is None
    w = rep.violating_pair
    assert w["point_index"] == 1 and w["product"] == -1.0
    assert w["mass"] > 0 and sorted(w["time_indices"]) == [0, 1]
    json.dumps(rep.to_dict())


def test_removed_mass_point_is_ignored():
    # rows (1,0) and (-1,0) with the first point dropped from the space
    k = as_kernel([[1.0, 0.0], [-1.0, 0.0]]).restrict_points([1])
    rep = check_max_associable(k)
    assert rep.associable
    assert np.array_equal(rep.rectified_kernel.values, [[0.0], [0.0]])


def test_same_sign_columns_rectify():
    k = as_kernel([[1.0, -2.0, 0.0], [3.0, -1.0, 5.0]])
    rep = check_max_associable(k)
    assert rep.associable
    assert np.array_equal(rep.rectified_kernel.values, np.abs(k.values))
    assert rep.rectified_kernel.is_nonnegative


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_associability_invariant_under_nonnegative_multipliers(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(4, 6))
    flip = rng.random(6) < 0.7
    v[:, flip] = np.abs(v[:, flip])
    h = rng.uniform(0.1, 5.0, size=6)
    k = as_kernel(v)
    assert check_max_associable(as_kernel(v * h)).associable == check_max_associable(k).associable
    # zeroing atoms can only remove conflicts
    h0 = h * (rng.random(6) < 0.5)
    if check_max_associable(k).associable:
        assert check_max_associable(as_kernel(v * h0)).associable


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_rectification_soundness(seed):
    rng = np.random.default_rng(seed)
    signs = np.where(rng.random(9) < 0.5, -1.0, 1.0)
    v = rng.random((4, 9)) * signs
    k = as_kernel(v, rng.random(9) + 0.1)
    rep = check_max_associable(k)
    assert rep.associable
    r = rep.rectified_kernel
    for idx, c in probe_set(4, 8, rng):
        rows = list(idx)
        x = sum_norm(k.values[rows], c, 1.3, k.masses)
        y = sum_norm(r.values[rows], c, 1.3, r.masses)
        assert abs(x - y) <= 1e-12 * max(x, y, 1e-300)


# ---------------------------------------------------------------- associated pairs

def test_chentzov_pair():
    k = ParametricKernel("chentzov_interval", {}).evaluate(np.linspace(-1, 1, 5))
    pair = associate(k, 1.0)
    assert pair.sum.kernel is pair.max.kernel is pair.kernel
    assert pair.sum.regime == "sum" and pair.max.regime == "max"
    assert pair.sum.scale(4) == pair.max.scale(4)


def test_lfsm_symmetric_grid_fails_rectification():
    k = ParametricKernel("lfsm", {"H": 0.7, "alpha": 1.5, "a": 1.0, "b": 1.0}).evaluate([-1.0, 1.0])
    with pytest.raises(NotMaxAssociableError) as exc:
        associate(k, 1.5, rectify=True)
    assert exc.value.report.violating_pair["product"] < 0
    with pytest.raises(RegimeError):
        associate(k, 1.5)


def test_single_row_pair_scales_match():
    k = as_kernel([[0.5, 2.0, 1.0]], masses=[1.0, 0.25, 2.0])
    pair = associate(k, 0.8)
    expected = (0.5 ** 0.8 + 0.25 * 2 ** 0.8 + 2.0) ** (1 / 0.8)
    assert pair.sum.scale(0) == pytest.approx(expected, rel=1e-14)
    assert pair.max.scale(0) == pair.sum.scale(0)


def test_pair_rejects_alpha_two():
    with pytest.raises(StabAssocError):
        associate(as_kernel([[1.0]]), 2.0)


# ---------------------------------------------------------------- isometric pairs

def test_isometric_copy_examples():
    rng = np.random.default_rng(1)
    k = _random_kernel(rng)
    for other in (k, isometric_copy(k, 1.3, rng, split=False), isometric_copy(k, 1.3, rng)):
        rep = norm_system_equivalence_test(k, other, 1.3, rng=rng)
        assert rep.sum_equal and rep.max_equal and rep.agree
        assert rep.sum_deviation < 1e-12 and rep.max_deviation < 1e-12


def test_scaled_row_breaks_both():
    rng = np.random.default_rng(2)
    k = _random_kernel(rng)
    v = np.array(k.values)
    v[3] *= 2
    rep = norm_system_equivalence_test(k, as_kernel(v, k.masses), 1.3, rng=rng)
    assert not rep.sum_equal and not rep.max_equal
    assert rep.sum_witness is not None and rep.max_witness is not None
    d = rep.to_dict()
    json.dumps(d)
    assert d["agree"] and len(d["probes"]) == len(rep.probes)


def test_equivalence_preconditions():
    k = as_kernel([[1.0, 2.0]])
    with pytest.raises(DimensionError):
        norm_system_equivalence_test(k, as_kernel([[1.0], [1.0]]), 1.0)
    with pytest.raises(RegimeError):
        norm_system_equivalence_test(k, as_kernel([[1.0, -2.0]]), 1.0)


def test_agreement_on_constructed_and_perturbed_pairs():
    rng = np.random.default_rng(3)
    for i in range(200):
        k = _random_kernel(rng)
        rep = norm_system_equivalence_test(k, isometric_copy(k, 1.3, rng), 1.3, rng=rng, trials=8)
        assert rep.sum_equal and rep.max_equal
        bad = perturbed_copy(k, rng, PERTURBATIONS[i % 3])
        rep = norm_system_equivalence_test(k, bad, 1.3, rng=rng, trials=8)
        assert not rep.sum_equal and not rep.max_equal


def test_unknown_perturbation():
    with pytest.raises(StabAssocError):
        perturbed_copy(as_kernel([[1.0, 2.0]]), 0, "twist")


# ---------------------------------------------------------------- stationarity

def test_time_constant_kernel_is_stationary():
    k = build_constant([1.0, 0.5, 2.0], [1.0, 1.0, 0.5], TimeGrid.lattice(0, 9))
    rep = check_stationarity(k, 1.2, [1, 2, -3], rng=0)
    assert rep.ok and rep.sum_deviation == 0.0 and rep.max_deviation == 0.0


def test_circular_moving_maxima_deviation_zero():
    k = build_moving_maxima({"shape": "exp", "rate": 1.0}, np.arange(16), np.arange(16),
                            period=16)
    rep = check_stationarity(k, 1.0, [1, 3, 5], rng=1)
    assert rep.sum_deviation == 0.0 and rep.max_deviation == 0.0
    assert rep.sum_ok and rep.max_ok and rep.agree
    json.dumps(rep.to_dict())


def test_modified_row_is_reported():
    k = build_moving_maxima({"shape": "exp", "rate": 1.0}, np.arange(16), np.arange(16),
                            period=16)
    v = np.array(k.values)
    v[6] *= 1.5
    bad = SpectralKernel(k.space, k.grid, v)
    rep = check_stationarity(bad, 1.0, [1], probes=[((5,), (1.0,)), ((6,), (1.0,))])
    assert not rep.sum_ok and not rep.max_ok and rep.agree
    assert rep.witness["shift"] == 1


def test_signed_kernel_has_no_max_verdict():
    k = as_kernel([[1.0, -1.0], [1.0, -1.0], [1.0, -1.0]])
    rep = check_stationarity(k, 1.5, [1], rng=0)
    assert rep.sum_ok and rep.max_ok is None and rep.agree


def test_shift_out_of_range():
    k = as_kernel(np.ones((3, 2)))
    with pytest.raises(DimensionError):
        check_stationarity(k, 1.0, [5])
    with pytest.raises(DimensionError):
        check_stationarity(k, 1.0, [1], probes=[((2,), (1.0,))])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_stationarity_verdicts_agree(seed):
    rng = np.random.default_rng(seed)
    period = int(rng.integers(4, 12))
    phi = np.abs(rng.normal(size=period))
    rows = np.array([np.roll(phi, t) for t in range(period)])
    if rng.random() < 0.5:
        rows[int(rng.integers(period))] *= rng.uniform(1.5, 3.0)
    k = as_kernel(rows)
    rep = check_stationarity(k, rng.uniform(0.3, 1.9), [1, 2], rng=rng)
    assert rep.agree


# ---------------------------------------------------------------- self-similarity

def test_mixed_fractional_deviation_shrinks():
    times = np.array([0.5, 1.0, 1.5])
    probes = probe_set(3, 8, np.random.default_rng(4))
    devs = []
    for r in (1, 2, 4):
        fam = ParametricKernel("mixed_fractional", {"H": 0.7, "alpha": 1.5}, r)
        rep = check_self_similarity(fam, 0.7, 1.5, [2.0, 0.5], times, probes=probes)
        assert rep.agree
        devs.append(max(rep.sum_deviation, rep.max_deviation))
    assert devs[0] > devs[1] > devs[2]


def test_wrong_exponent_is_a_violation():
    fam = ParametricKernel("mixed_fractional", {"H": 0.7, "alpha": 1.5}, 4)
    rep = check_self_similarity(fam, 0.8, 1.5, [2.0], [0.5, 1.0], rng=5)
    assert not rep.sum_ok and not rep.max_ok and rep.agree
    assert rep.witness["scale"] == 2.0


def test_self_similarity_preconditions():
    with pytest.raises(StabAssocError):
        check_self_similarity(as_kernel([[1.0]]), 0.5, 1.0, [2.0], [1.0])
    fam = ParametricKernel("mixed_fractional", {"H": 0.7, "alpha": 1.5})
    with pytest.raises(StabAssocError):
        check_self_similarity(fam, 0.7, 1.5, [-1.0], [1.0])


# ---------------------------------------------------------------- convergence

def test_constant_sequence_zero():
    k = as_kernel(np.ones((3, 4)))
    d = lalpha_distance(k, 0, [1, 2, 1], 1.3)
    assert np.all(d.sum_distances == 0) and np.all(d.max_distances == 0)


def test_shrinking_perturbation_vanishes():
    f = np.array([1.0, 2.0, 0.5])
    rows = [f] + [(1 + 1 / n) * f for n in range(1, 400)]
    k = as_kernel(np.vstack(rows))
    d = lalpha_distance(k, 0, range(1, 400), 0.8)
    assert np.all(np.diff(d.sum_distances) < 0) and np.all(np.diff(d.max_distances) < 0)
    assert d.sum_distances[-1] < 0.05 and d.max_distances[-1] < 0.05


def test_alternating_far_row_does_not_converge():
    f, g = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    k = as_kernel(np.vstack([f, g, f]))
    d = lalpha_distance(k, 0, [1, 2] * 10, 1.5)
    assert d.sum_distances[::2].min() > 0.5 and d.max_distances[::2].min() > 0.5


def test_signed_kernel_has_no_rho_sequence():
    k = as_kernel([[1.0, -1.0], [1.0, 1.0]])
    d = lalpha_distance(k, 0, [1], 1.0)
    assert d.max_distances is None and d.sum_distances[0] > 0
    with pytest.raises(DimensionError):
        lalpha_distance(k, 0, [5], 1.0)
