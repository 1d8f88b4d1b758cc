import numpy as np
import pytest

import polyhedra
from acceptance import process_acceptance
from riskproc import (DualError, ProcessDualVariable, ProcessRiskMeasure, axioms_hold, check_axioms_process,
                      dirac_duals_process, dual_eval_process, dual_normal, is_max_dual_process, pairing_functional,
                      penalty_process, properties, rho_eval, sample_process_duals, validate_process_dual)
from space import Atom

WORST = {"family": "worst_case"}


def _two_state_position(x0, x1):
    X = np.zeros((2, 2, 1))
    X[0, :, 0] = x0
    X[1, :, 0] = x1
    return X


def test_worst_case_risk_values(two_state_layout):
    A = process_acceptance(two_state_layout, 0, WORST)
    rho = ProcessRiskMeasure(A, 1)
    label = rho.labels()[0]
    assert polyhedra.equals(rho(np.zeros((2, 2, 1))).piece(label), polyhedra.orthant(1, [0]))
    X = _two_state_position(0, [2, -1])
    assert polyhedra.equals(rho(X).piece(label), polyhedra.orthant(1, [1]))
    assert polyhedra.equals(rho_eval(A, X + 3, 1).piece(label), polyhedra.orthant(1, [-2]))


def test_worst_case_satisfies_every_axiom(binary_layout, rng):
    rho = ProcessRiskMeasure(process_acceptance(binary_layout, 1, WORST), 1)
    report = check_axioms_process(rho, rng, samples=5)
    assert axioms_hold(report)
    assert properties(report) == {"normalized": True, "convex": True, "coherent": True}


def test_decreasing_generator_breaks_monotonicity(two_state_layout, rng):
    spec = {"family": "generators", "rows": [{"terms": [[1, "u", 0, -1]], "rhs": 0}]}
    rho = ProcessRiskMeasure(process_acceptance(two_state_layout, 0, spec), 1)
    report = check_axioms_process(rho, rng, samples=20)
    assert report["monotonicity"]["status"] == "fail"
    assert "Y" in report["monotonicity"]["witness"]
    assert not axioms_hold(report)


def test_dirac_duals_are_admissible(binary):
    duals = dirac_duals_process(binary, 1, 1, 1)
    # times 1 and 2, two states per F_1-atom, one eligible asset
    assert len(duals) == 4
    for Qw in duals:
        validate_process_dual(binary, Qw, 1)


def test_sampled_duals_are_admissible(binary, rng):
    for Qw in sample_process_duals(binary, rng, 0, 1, 1, count=10):
        validate_process_dual(binary, Qw, 1)


def test_dirac_duals_recover_worst_case_risk(two_state_layout):
    A = process_acceptance(two_state_layout, 0, WORST)
    X = _two_state_position(0.5, [2, -1])
    duals = dirac_duals_process(two_state_layout.space, 0, 1, 1)
    assert polyhedra.equals(dual_eval_process(A, X, duals, 1), rho_eval(A, X, 1))


def test_dual_representation_is_an_outer_bound(binary_layout, rng):
    A = process_acceptance(binary_layout, 1, WORST)
    X = A.random_position(rng)
    value = rho_eval(A, X, 1)
    space = binary_layout.space
    single = dirac_duals_process(space, 1, 1, 1)[:1]
    assert polyhedra.subset_of(value, dual_eval_process(A, X, single, 1))
    sampled = sample_process_duals(space, rng, 1, 1, 1, 5)
    assert polyhedra.subset_of(value, dual_eval_process(A, X, sampled, 1))


def test_negative_weight_is_rejected(two_state):
    w = np.zeros((2, 2, 1))
    w[0, :, 0] = -1
    with pytest.raises(DualError, match="negative eligible"):
        validate_process_dual(two_state, ProcessDualVariable(0, np.ones((2, 1, 2)), w), 1)


def test_vanishing_weights_are_rejected(two_state):
    with pytest.raises(DualError, match="vanishes"):
        validate_process_dual(two_state, ProcessDualVariable(0, np.ones((2, 1, 2)), np.zeros((2, 2, 1))), 1)


def test_density_must_agree_with_p_on_f_t(two_state):
    w = np.zeros((2, 2, 1))
    w[1, :, 0] = 1
    Q = np.ones((2, 1, 2))
    Q[1, 0] = [1.5, 1.0]
    with pytest.raises(DualError, match="agree with P"):
        validate_process_dual(two_state, ProcessDualVariable(0, Q, w), 1)


def test_penalty_of_shifted_set(two_state_layout):
    A = process_acceptance(two_state_layout, 0, {"family": "shifted", "shift": 1})
    Qw = dirac_duals_process(two_state_layout.space, 0, 1, 1)[0]
    penalty = penalty_process(A, Qw, 1)
    assert polyhedra.equals(penalty.pieces[0], polyhedra.orthant(1, [-1]))


def test_penalty_of_unbounded_pairing_is_empty(two_state_layout):
    spec = {"family": "generators", "rows": [{"terms": [[0, "u", 0, 1]], "rhs": 0}]}
    A = process_acceptance(two_state_layout, 0, spec)
    Qw = dirac_duals_process(two_state_layout.space, 0, 1, 1)[2]
    assert polyhedra.is_empty(penalty_process(A, Qw, 1).pieces[0])


def test_maximal_duals_of_a_cone(two_state_layout):
    spec = {"family": "generators", "rows": [{"terms": [[0, "u", 0, 1]], "rhs": 0}]}
    A = process_acceptance(two_state_layout, 0, spec)
    duals = dirac_duals_process(two_state_layout.space, 0, 1, 1)
    ok, witness = is_max_dual_process(A, duals[0])
    assert ok and witness is None
    ok, witness = is_max_dual_process(A, duals[2])
    assert not ok
    assert witness["value"] == "-inf"


def test_maximal_duals_need_a_cone(two_state_layout):
    A = process_acceptance(two_state_layout, 0, {"family": "shifted", "shift": 1})
    Qw = dirac_duals_process(two_state_layout.space, 0, 1, 1)[0]
    with pytest.raises(DualError, match="coherent"):
        is_max_dual_process(A, Qw)


def _atom_weighted_dual(space):
    """w = 1 on the first F_1-atom and 2 on the second, for times 1 and 2."""
    w = np.zeros((3, 4, 1))
    w[1:, :2, 0] = 1
    w[1:, 2:, 0] = 2
    return ProcessDualVariable(1, np.ones((3, 1, 4)), w)


def test_dual_weights_are_read_on_each_atom(binary_layout):
    space = binary_layout.space
    Qw = _atom_weighted_dual(space)
    validate_process_dual(space, Qw, 1)
    assert np.allclose(dual_normal(space, Qw, Atom("future", 1, 0), 1), [2])
    assert np.allclose(dual_normal(space, Qw, Atom("future", 1, 1), 1), [4])
    c = pairing_functional(binary_layout, Qw, Atom("future", 1, 1))
    assert np.isclose(float(c.astype(float).sum()), 4)


def test_penalty_on_a_later_partition(binary_layout):
    A = process_acceptance(binary_layout, 1, WORST)
    penalty = penalty_process(A, _atom_weighted_dual(binary_layout.space), 1)
    assert len(penalty.pieces) == 2
    for piece in penalty.pieces:
        assert polyhedra.equals(piece, polyhedra.orthant(1, [0]))
