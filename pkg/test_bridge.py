import numpy as np
import pytest

import polyhedra
from acceptance import process_acceptance, restricted_acceptance, vector_acceptance
from bridge import (AugmentedProcessRiskMeasure, BridgeError, dual_round_trip, full_eligible_simplify, lift,
                    lift_acceptance, lift_family, map_dual_to_process, map_dual_to_vector, maps_to_process_dual,
                    max_dual_correspondence, penalty_decompose_check, penalty_reverse_check, project,
                    project_acceptance, project_family, reconstruct)
from riskproc import (ProcessDualVariable, ProcessRiskMeasure, dirac_duals_process, sample_process_duals,
                      validate_process_dual)
from riskvec import (RestrictedRiskMeasure, VectorDualVariable, VectorRiskMeasure, dirac_duals_vector,
                     sample_vector_duals)
from space import lift_space, reference_measure

WORST = {"family": "worst_case"}


def _aug(layout, t, process=WORST, restricted=WORST):
    rs = tuple(RestrictedRiskMeasure(restricted_acceptance(layout, s, restricted, horizon=t), 1) for s in range(t))
    return AugmentedProcessRiskMeasure(rs, ProcessRiskMeasure(process_acceptance(layout, t, process), 1))


def test_lift_of_worst_case_is_vector_worst_case(binary_layout, rng):
    rbar = lift(_aug(binary_layout, 1))
    target = VectorRiskMeasure(vector_acceptance(binary_layout, 1, WORST), 1)
    for _ in range(3):
        X = target.acceptance.random_position(rng)
        assert polyhedra.equals(rbar(X), target(X))


def test_lift_at_time_zero_has_only_the_process_part(two_state_layout):
    rbar = lift(_aug(two_state_layout, 0))
    assert len(rbar.acceptance.parts) == 1
    assert rbar.labels() == process_acceptance(two_state_layout, 0, WORST).labels()


def test_restricted_times_must_cover_the_past(binary_layout):
    process = ProcessRiskMeasure(process_acceptance(binary_layout, 2, WORST), 1)
    with pytest.raises(BridgeError, match="expected 0..1"):
        AugmentedProcessRiskMeasure((), process)


def test_project_undoes_lift(binary_layout, rng):
    aug = _aug(binary_layout, 2, process={"family": "shifted", "shift": -1})
    back = project(lift(aug), use_cache=False)
    for _ in range(3):
        X = aug.process.acceptance.random_position(rng)
        assert polyhedra.equals(back.process(X), aug.process(X))
    samples = {0: np.full((4, 1), -2.0), 1: np.array([[1.0], [1.0], [-2.0], [-2.0]])}
    for R, R_back in zip(aug.restricted, back.restricted):
        Z = samples[R.time]
        assert polyhedra.equals(R_back(Z), R(Z))


def test_relifting_a_coupled_set_loses_the_coupling(two_state_layout):
    spec = {"family": "generators", "rows": [{"terms": [[0, "u", 0, 1], [1, "u", 0, 1]], "rhs": 0}]}
    A = vector_acceptance(two_state_layout, 1, spec)
    restricted, process = project_acceptance(A, 1, use_cache=False)
    relifted = lift_acceptance(restricted, process)
    zero = np.zeros((2, 2, 1))
    assert polyhedra.is_whole(polyhedra.canonicalize(relifted.evaluate(zero, 1).pieces[0]))
    assert not polyhedra.equals(relifted.evaluate(zero, 1), A.evaluate(zero, 1))


def test_families_round_trip(load):
    model = load("binary_T2")
    vectors = lift_family(model.family)
    back = project_family(vectors, use_cache=False)
    assert sorted(back.restricted) == sorted(model.family.restricted)
    X = np.zeros((3, 4, 1))
    X[2, :, 0] = [1, -1, 2, 0]
    for t in model.space.times:
        assert polyhedra.equals(back.process[t](X), model.family.process[t](X))


def test_w_map_of_reference_dual(two_state):
    opt = lift_space(two_state)
    dual = VectorDualVariable(0, (reference_measure(two_state),), np.ones((2, 2, 1)))
    Qw = map_dual_to_process(opt, dual)
    assert np.allclose(Qw.w[:, :, 0], 0.5)
    assert np.allclose(Qw.Q, 1.0)


def test_w_bar_map_of_reference_dual(two_state):
    opt = lift_space(two_state)
    Qw = ProcessDualVariable(0, np.ones((2, 1, 2)), np.full((2, 2, 1), 0.5))
    dual = map_dual_to_vector(opt, Qw)
    assert np.allclose(dual.wbar, 1.0)
    assert np.allclose(dual.Qbar[0].q, 1.0)
    assert np.allclose(dual.Qbar[0].psi, two_state.mu)


def test_sampled_vector_duals_map_into_process_duals(binary, rng):
    opt = lift_space(binary)
    for t in binary.times:
        for dual in sample_vector_duals(binary, rng, t, 1, 1, count=20, null_prob=0.9):
            assert maps_to_process_dual(dual, 1)
            validate_process_dual(binary, map_dual_to_process(opt, dual), 1)


def test_past_only_vector_dual_has_no_process_image(binary):
    wbar = np.zeros((3, 4, 1))
    wbar[0] = 1
    dual = VectorDualVariable(1, (reference_measure(binary),), wbar)
    assert not maps_to_process_dual(dual, 1)
    assert np.all(map_dual_to_process(lift_space(binary), dual).w == 0)


def test_dual_maps_round_trip(binary, rng):
    opt = lift_space(binary)
    for Qw in sample_process_duals(binary, rng, 1, 1, 1, count=6) + dirac_duals_process(binary, 1, 1, 1):
        ok, witness = dual_round_trip(opt, Qw)
        assert ok, witness


@pytest.mark.parametrize("t", [1, 2])
def test_penalty_decomposes_over_the_lift(binary_layout, rng, t):
    aug = _aug(binary_layout, t, process={"family": "shifted", "shift": -1})
    space = binary_layout.space
    duals = dirac_duals_vector(space, t, 1, 1) + sample_vector_duals(space, rng, t, 1, 1, count=3)
    for dual in duals:
        assert penalty_decompose_check(aug, dual)["status"] == "pass"


def test_penalties_reverse_through_the_lift(binary_layout, rng):
    aug = _aug(binary_layout, 1)
    space = binary_layout.space
    for Qw in dirac_duals_process(space, 1, 1, 1) + sample_process_duals(space, rng, 1, 1, 1, count=3):
        report = penalty_reverse_check(aug, Qw)
        assert report["status"] == "pass"
        assert set(report["parts"]) == {"restricted:0", "process"}


def test_full_eligibility_needs_every_asset(load):
    model = load("two_asset_T1")
    with pytest.raises(BridgeError, match="m=1, d=2"):
        full_eligible_simplify(model.vectors[1])


def test_full_eligible_reconstruction(load, rng):
    model = load("binary_T2")
    for t in (1, 2):
        rbar = model.vectors[t]
        C, rho = full_eligible_simplify(rbar)
        assert len(C) == t
        for _ in range(3):
            X = rbar.acceptance.random_position(rng)
            assert polyhedra.equals(reconstruct(C, rho, X), rbar(X))


def test_maximal_duals_correspond(binary_layout):
    aug = _aug(binary_layout, 1)
    space = binary_layout.space
    report = max_dual_correspondence(aug, dirac_duals_vector(space, 1, 1, 1), dirac_duals_process(space, 1, 1, 1))
    assert report["status"] == "pass"
    assert report["samples"] == 5 + 4
