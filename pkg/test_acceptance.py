import numpy as np
import pytest

import polyhedra
from acceptance import (AcceptanceError, CellLayout, ProcessAcceptanceSet, intersect, process_acceptance,
                        restricted_acceptance, vector_acceptance)
from space import Atom

WORST = {"family": "worst_case"}


def _position(space, values):
    """(T+1, N, 1) position from per-row state values."""
    return np.asarray(values, dtype=float).reshape(space.horizon + 1, space.n_states, 1)


def test_layout_cells_follow_atoms(binary):
    layout = CellLayout(binary, 2)
    assert layout.cells == ((0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (2, 3))
    assert layout.n_coords == 14
    assert layout.coord(1, 1, 1) == 5


def test_layout_flatten_reads_adapted_positions(binary_layout):
    X = _position(binary_layout.space, [[1, 1, 1, 1], [2, 2, 3, 3], [4, 5, 6, 7]])
    x = binary_layout.flatten(X)
    assert list(x) == [1, 2, 3, 4, 5, 6, 7]
    assert np.allclose(binary_layout.unflatten(x), X)


def test_capital_field_covers_frozen_block(binary_layout):
    label = Atom("future", 1, 0)
    field = binary_layout.capital_field([label], {label: [2.0]}, 1)
    assert np.allclose(field[:, :, 0], [[0, 0, 0, 0], [2, 2, 0, 0], [2, 2, 0, 0]])


def test_worst_case_process_ignores_rows_before_t(binary_layout):
    A = process_acceptance(binary_layout, 1, WORST)
    X = _position(binary_layout.space, [[-9, -9, -9, -9], [0, 0, 1, 1], [0, 2, 3, 4]])
    assert A.contains(X)
    X[2, 0, 0] = -0.5
    assert not A.contains(X)


def test_vector_worst_case_values_per_atom(two_state_layout):
    A = vector_acceptance(two_state_layout, 1, WORST)
    X = _position(two_state_layout.space, [[2, 2], [4, -1]])
    value = A.evaluate(X, 1)
    assert value.labels == (Atom("past", 0, 0), Atom("future", 1, 0), Atom("future", 1, 1))
    expected = [-2, -4, 1]
    for piece, bound in zip(value.pieces, expected):
        assert polyhedra.equals(piece, polyhedra.orthant(1, [bound]))


def test_vector_zero_position_gives_nonnegative_blocks(two_state_layout):
    A = vector_acceptance(two_state_layout, 1, WORST)
    value = A.evaluate(np.zeros((2, 2, 1)), 1)
    for piece in value.pieces:
        assert polyhedra.equals(piece, polyhedra.orthant(1, [0]))


def test_restricted_shift(binary_layout):
    A = restricted_acceptance(binary_layout, 1, WORST, horizon=2)
    X = np.zeros((3, 4, 1))
    X[1, :2, 0] = -3
    value = A.evaluate(X, 1)
    assert value.labels == (Atom("past", 1, 0), Atom("past", 1, 1))
    assert polyhedra.equals(value.pieces[0], polyhedra.orthant(1, [3]))
    assert polyhedra.equals(value.pieces[1], polyhedra.orthant(1, [0]))


def test_expectation_family_averages_each_row(binary_layout):
    A = process_acceptance(binary_layout, 1, {"family": "expectation"})
    X = _position(binary_layout.space, [[0, 0, 0, 0], [1, 1, -1, -1], [3, -2, 0, 0]])
    value = A.evaluate(X, 1)
    # atom {uu, ud}: E[X_1] = 1, E[X_2] = 1/2; atom {du, dd}: E[X_1] = -1, E[X_2] = 0
    assert polyhedra.equals(value.pieces[0], polyhedra.orthant(1, [-0.5]))
    assert polyhedra.equals(value.pieces[1], polyhedra.orthant(1, [1]))


def test_shifted_family_moves_the_cone(two_state_layout):
    A = process_acceptance(two_state_layout, 0, {"family": "shifted", "shift": -2})
    value = A.evaluate(np.zeros((2, 2, 1)), 1)
    assert polyhedra.equals(value.pieces[0], polyhedra.orthant(1, [-2]))
    assert not A.is_cone


def test_cone_family_on_two_assets(two_state):
    layout = CellLayout(two_state, 2)
    A = process_acceptance(layout, 1, {"family": "cone", "normals": [[1, 1]]})
    X = np.zeros((2, 2, 2))
    X[1, :, 0] = 1
    X[1, :, 1] = -1
    assert A.contains(X)
    assert A.is_cone
    value = A.evaluate(X, 2)
    assert polyhedra.contains_point(value.pieces[0], [-1, 1])
    assert not polyhedra.contains_point(value.pieces[0], [-1, 0.5])


def test_generators_family_places_terms(two_state_layout):
    spec = {"family": "generators", "rows": [{"terms": [[1, "u", 0, 1], [1, "dn", 0, 1]], "rhs": 1}]}
    A = process_acceptance(two_state_layout, 1, spec)
    assert A.contains(_position(two_state_layout.space, [[0, 0], [0.5, 0.5]]))
    assert not A.contains(_position(two_state_layout.space, [[0, 0], [0.5, 0.4]]))


def test_intersection_family_stacks_members(two_state_layout):
    spec = {"family": "intersection", "members": [{"family": "expectation"}, {"family": "shifted", "shift": -2}]}
    A = process_acceptance(two_state_layout, 0, spec)
    assert A.G.shape[0] == 2 + 3
    assert intersect(A, process_acceptance(two_state_layout, 0, WORST)).G.shape[0] == 8


def test_unknown_family_is_rejected(two_state_layout):
    with pytest.raises(AcceptanceError, match="unknown family"):
        process_acceptance(two_state_layout, 0, {"family": "median"})


def test_cone_normal_length_must_match_d(two_state_layout):
    with pytest.raises(AcceptanceError, match="expected 1 entries"):
        process_acceptance(two_state_layout, 0, {"family": "cone", "normals": [[1, 1]]})


def test_generators_reject_unknown_state(two_state_layout):
    spec = {"family": "generators", "rows": [{"terms": [[1, "sideways", 0, 1]]}]}
    with pytest.raises(AcceptanceError, match="unknown state"):
        process_acceptance(two_state_layout, 1, spec)


def test_vector_expectation_is_rejected(two_state_layout):
    with pytest.raises(AcceptanceError, match="expectation"):
        vector_acceptance(two_state_layout, 1, {"family": "expectation"})


def test_process_set_cannot_constrain_earlier_rows(two_state_layout):
    G = np.zeros((1, two_state_layout.n_coords))
    G[0, two_state_layout.coord(0, 0, 0)] = 1
    with pytest.raises(AcceptanceError, match="outside its rows"):
        ProcessAcceptanceSet(two_state_layout, G, np.zeros(1), 1)
