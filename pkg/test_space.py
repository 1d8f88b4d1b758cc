from fractions import Fraction

import numpy as np
import pytest

from conftest import BINARY_PARTITIONS, BINARY_STATES
from space import (SpaceError, bar_cond_expectation, bar_w_map, build_space, compose, cond_expectation, decompose,
                   is_Mt_preserving, lift_space, random_optional_measure, reference_measure, stopping_time, w_map,
                   xi, xi_bar)


def test_xi_is_one_when_times_coincide(two_state):
    density = np.array([1.6, 0.4])
    assert np.allclose(xi(two_state, density, 1, 1), [1.0, 1.0])
    assert np.allclose(xi(two_state, density, 0, 0), [1.0, 1.0])


def test_xi_two_state_equals_density(two_state):
    assert np.allclose(xi(two_state, np.array([1.6, 0.4]), 0, 1), [1.6, 0.4])


def test_xi_falls_back_to_one_below_null_atom(binary):
    density = np.array([0.0, 0.0, 2.0, 2.0])
    ratio = xi(binary, density, 1, 2)
    assert np.allclose(ratio, [1.0, 1.0, 1.0, 1.0])
    assert list(stopping_time(binary, density)) == [1, 1, 3, 3]


def test_xi_rejects_reversed_times(two_state):
    with pytest.raises(SpaceError):
        xi(two_state, np.ones(2), 1, 0)


def test_cond_expectation_examples(two_state):
    X = np.array([2.0, -1.0])
    assert np.allclose(cond_expectation(two_state, X, np.ones(2), 0), [0.5, 0.5])
    assert np.allclose(cond_expectation(two_state, X, np.array([1.6, 0.4]), 0), [1.4, 1.4])


def test_cond_expectation_vector_uses_one_density_per_asset(two_state):
    X = np.array([[2.0, 1.0], [-1.0, 3.0]])
    Q = np.array([[1.6, 0.4], [1.0, 1.0]])
    value = cond_expectation(two_state, X, Q, 0)
    assert np.allclose(value[0], [1.4, 2.0])


def test_w_map_examples(two_state):
    w = np.ones((2, 1))
    Q = np.array([[1.6, 0.4]])
    assert np.allclose(w_map(two_state, Q, w, 0, 1)[:, 0], [1.6, 0.4])
    assert np.allclose(w_map(two_state, Q, w, 1, 1), w)
    assert np.allclose(w_map(two_state, Q, np.zeros((2, 1)), 0, 1), 0.0)


def test_optional_expectation_uses_p_times_mu(two_state):
    opt = lift_space(two_state)
    X = np.array([[2.0, 2.0], [4.0, 0.0]])
    assert opt.expectation(X) == pytest.approx(2.0)


def test_optional_labels_split_past_and_frozen_block(binary):
    opt = lift_space(binary)
    assert [(l.kind, l.time) for l in opt.labels(0)] == [("future", 0)]
    kinds = [(l.kind, l.time) for l in opt.labels(2)]
    assert kinds == [("past", 0), ("past", 1), ("past", 1), ("future", 2), ("future", 2), ("future", 2),
                     ("future", 2)]


def test_decompose_reference_measure_is_identity(binary):
    opt = lift_space(binary)
    Pbar = reference_measure(binary)
    Qbar = decompose(opt, Pbar.masses())
    assert np.allclose(Qbar.q, 1.0)
    assert np.allclose(Qbar.psi, binary.mu)


def test_decompose_aggregates_cells_of_trivial_time_zero(two_state):
    opt = lift_space(two_state)
    weights = np.array([[0.2, 0.1], [0.4, 0.3]])
    Qbar = decompose(opt, weights)
    assert np.allclose(Qbar.q, [8 / 7, 6 / 7])
    assert np.allclose(Qbar.psi, [[0.3, 0.3], [0.7, 0.7]])
    assert np.allclose(Qbar.masses()[1], [0.4, 0.3])
    assert Qbar.masses()[0].sum() == pytest.approx(0.3)


def test_decompose_exact_arithmetic(two_state_exact):
    opt = lift_space(two_state_exact)
    weights = [[Fraction(1, 5), Fraction(1, 10)], [Fraction(2, 5), Fraction(3, 10)]]
    Qbar = decompose(opt, weights)
    assert list(Qbar.q) == [Fraction(8, 7), Fraction(6, 7)]
    assert list(Qbar.psi[1]) == [Fraction(7, 10), Fraction(7, 10)]


def test_decompose_all_mass_at_time_zero(two_state):
    opt = lift_space(two_state)
    Qbar = decompose(opt, np.array([[0.6, 0.4], [0.0, 0.0]]))
    assert np.allclose(Qbar.psi[0], 1.0)
    assert np.allclose(Qbar.psi[1], 0.0)
    assert np.allclose(Qbar.q, 1.0)


def test_compose_is_idempotent_on_normal_form(binary, rng):
    for _ in range(5):
        Qbar = random_optional_measure(binary, rng, null_prob=0.3, exhaust_prob=0.3)
        again = compose(binary, Qbar.q, Qbar.psi)
        assert np.allclose(again.q, Qbar.q)
        assert np.allclose(again.psi, Qbar.psi)
        assert Qbar.masses().sum() == pytest.approx(1.0)


def test_compose_zero_density_leaves_no_mass(two_state):
    Qbar = compose(two_state, [2.0, 0.0], [[0.4, 0.4], [0.6, 0.6]])
    assert np.allclose(Qbar.masses()[:, 1], 0.0)


def test_compose_rejects_bad_psi(two_state):
    with pytest.raises(SpaceError, match="sum to 1"):
        compose(two_state, [1.0, 1.0], [[0.4, 0.4], [0.4, 0.4]])


def test_mt_preserving(two_state):
    opt = lift_space(two_state)
    Pbar = reference_measure(two_state)
    Qbar = decompose(opt, np.array([[0.2, 0.1], [0.4, 0.3]]))
    assert is_Mt_preserving(opt, Pbar, 1)
    assert is_Mt_preserving(opt, Qbar, 0)
    assert not is_Mt_preserving(opt, Qbar, 1)


def test_bar_cond_expectation_at_zero_and_horizon(two_state):
    opt = lift_space(two_state)
    Pbar = reference_measure(two_state)
    X = np.array([[2.0, 2.0], [4.0, 0.0]])
    assert np.allclose(bar_cond_expectation(opt, X, Pbar, 0), 2.0)
    assert np.allclose(bar_cond_expectation(opt, X, Pbar, 1), X)


def test_bar_cond_expectation_matches_atom_averages(binary, rng):
    opt = lift_space(binary)
    Pbar = reference_measure(binary)
    X = np.stack([np.full(4, 1.0), np.array([2.0, 2.0, -1.0, -1.0]), np.array([3.0, 1.0, 0.0, 4.0])])
    value = bar_cond_expectation(opt, X, Pbar, 1)
    # F-bar_1 atoms: the realized cell at time 0 and {uu, ud} x {1, 2}, {du, dd} x {1, 2}
    assert np.allclose(value[0], 1.0)
    mass = binary.mu[1:, :2] * 0.25
    expected = (mass * X[1:, :2]).sum() / mass.sum()
    assert np.allclose(value[1:, :2], expected)


def test_xi_bar_of_reference_measure_is_one(binary):
    opt = lift_space(binary)
    assert np.allclose(xi_bar(opt, reference_measure(binary), 0, 2), 1.0)


def test_bar_w_map_is_identity_when_times_coincide(two_state):
    opt = lift_space(two_state)
    wbar = np.ones((2, 2, 1))
    assert np.allclose(bar_w_map(opt, [reference_measure(two_state)], wbar, 1, 1), wbar)


def test_mu_must_sum_to_one():
    with pytest.raises(SpaceError, match="sum to 0.9"):
        build_space(["u", "dn"], 1, [[["u", "dn"]], [["u"], ["dn"]]], {"u": 0.5, "dn": 0.5},
                    mu=[[0.45, 0.45], [0.45, 0.45]])


def test_prob_must_sum_to_one():
    with pytest.raises(SpaceError, match="space.prob"):
        build_space(["u", "dn"], 1, [[["u", "dn"]], [["u"], ["dn"]]], {"u": 0.5, "dn": 0.4})


def test_partition_must_refine():
    partitions = [[["a", "b", "c", "d"]], [["a", "b"], ["c", "d"]], [["a", "c"], ["b"], ["d"]],
                  [["a"], ["b"], ["c"], ["d"]]]
    with pytest.raises(SpaceError, match=r"\['a', 'c'\] is not contained"):
        build_space(["a", "b", "c", "d"], 3, partitions, [0.25] * 4)


def test_mu_must_be_adapted():
    mu = [[0.5, 0.25, 0.5, 0.5], [0.25, 0.25, 0.25, 0.25], [0.25, 0.5, 0.25, 0.25]]
    with pytest.raises(SpaceError, match="adapted"):
        build_space(BINARY_STATES, 2, BINARY_PARTITIONS, [0.25] * 4, mu=mu)
