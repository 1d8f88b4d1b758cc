import numpy as np

import consistency
import polyhedra
from bridge import lift_family
from consistency import (CrossHorizonFixture, ProcessFixture, VectorFixture, check_joint_mptc, check_mptc_process,
                         check_mptc_vector, check_one_step, check_recursive_relation, cross_implication,
                         derive_joint_fixtures, embed, equivalence_harness, generate_fixtures, one_step_chain,
                         process_fixtures, process_implication, union_inclusion, vector_implication)


def _half_lines(**bounds):
    return polyhedra.assemble(tuple(bounds), [polyhedra.orthant(1, [b]) for b in bounds.values()])


def _pivot_pair():
    """X >= Y with equal minima on each F_1-atom over times 1 and 2, but a larger mean at time 1."""
    Y = np.zeros((3, 4, 1))
    X = np.zeros((3, 4, 1))
    Y[0, :, 0] = X[0, :, 0] = 3
    Y[1, :, 0] = [0, 0, 0, 0]
    Y[2, :, 0] = [-1, 1, 0, 1]
    X[1, :, 0] = [1, 1, 1, 1]
    X[2, :, 0] = [-1, 2, 0, 2]
    return X, Y


def test_union_inclusion_of_half_lines():
    assert union_inclusion(_half_lines(a=1), [_half_lines(a=0)])["status"] == "pass"
    result = union_inclusion(_half_lines(a=0), [_half_lines(a=1)])
    assert result["status"] == "fail"
    assert result["witness"]["excluded_by"] == {"0": ["a", 0]}
    assert result["witness"]["points"]["a"][0] < 1


def test_union_inclusion_needs_the_union():
    bounded = polyhedra.halfspaces([[1], [-1]], [0, -1])
    left = polyhedra.assemble(("a",), [polyhedra.orthant(1, [0])])
    rights = [polyhedra.assemble(("a",), [bounded]), _half_lines(a=1)]
    assert union_inclusion(left, rights)["status"] == "pass"
    assert union_inclusion(left, rights[:1])["status"] == "fail"


def test_union_inclusion_mixes_atoms():
    left = _half_lines(a=0, b=0)
    rights = [_half_lines(a=0, b=1), _half_lines(a=1, b=0)]
    result = union_inclusion(left, rights)
    assert result["status"] == "fail"
    assert set(result["witness"]["excluded_by"]) == {"0", "1"}
    assert union_inclusion(_half_lines(a=1, b=1), rights)["status"] == "pass"


def test_union_inclusion_against_nothing():
    result = union_inclusion(_half_lines(a=0), [polyhedra.assemble(("a",), [polyhedra.empty_set(1)])])
    assert result["status"] == "fail"
    assert union_inclusion(polyhedra.assemble(("a",), [polyhedra.empty_set(1)]), [])["status"] == "pass"


def test_union_inclusion_falls_back_to_sampling(rng):
    result = union_inclusion(_half_lines(a=1, b=1), [_half_lines(a=0, b=0), _half_lines(a=0, b=1)], rng, cap=1)
    assert result["status"] == "sampled"


def test_sampled_tier_draws_ten_thousand_points():
    assert consistency.SAMPLE_POINTS >= 10 ** 4


def test_sampled_tier_finds_a_thin_gap_between_facets(rng):
    left = polyhedra.assemble(("a",), [polyhedra.halfspaces([[1, 0], [-1, 0], [0, 1]], [0, -0.0005, 0])])
    shifted = polyhedra.assemble(("a",), [polyhedra.halfspaces([[1, 0], [0, 1]], [0.001, 0])])
    capped = polyhedra.assemble(("a",), [polyhedra.halfspaces([[1, 0], [0, 1], [0, -1]], [0, 0, -1])])
    result = union_inclusion(left, [shifted, capped], rng, cap=1, samples=1)
    assert result["status"] == "fail"
    assert result["tier"] == "midpoint"
    x, y = result["witness"]["points"]["a"]
    assert x < 0.001 and y > 1


def test_fixture_kinds_cycle(binary_layout, rng):
    fixtures = generate_fixtures(binary_layout, rng, count=4)
    assert [(F.t, F.s) for F in fixtures[::4]] == [(0, 1), (0, 2), (1, 2)]
    assert [F.kind for F in fixtures[:4]] == ["reflexive", "min_preserving", "dominated", "random_union"]
    assert all(F.product for F in fixtures)
    assert len(process_fixtures(fixtures)) == len(fixtures)


def test_worst_case_is_time_consistent(load, rng):
    model = load("binary_T2")
    fixtures = generate_fixtures(model.layout, rng, count=4)
    assert check_mptc_process(model.family.process, process_fixtures(fixtures), rng)["status"] == "pass"
    assert check_mptc_vector(model.vectors, fixtures, rng)["status"] == "pass"


def test_reflexive_fixture_holds(load, rng):
    model = load("broken_T2")
    X, _ = _pivot_pair()
    record = process_implication(model.family.process, ProcessFixture(0, 1, X, X, (X,), "reflexive"), rng)
    assert record["verdict"] == "holds"


def test_expectation_at_time_zero_breaks_consistency(load, rng):
    model = load("broken_T2")
    X, Y = _pivot_pair()
    result = check_mptc_process(model.family.process, [ProcessFixture(0, 1, X, X, (Y,), "min_preserving")], rng)
    assert result["status"] == "fail"
    assert result["witness"]["t"] == 0
    assert result["verdicts"]["violated"] == 1


def test_restricted_measures_across_horizons(load, rng):
    model = load("cross_horizon_T2")
    B = np.zeros((4, 2))
    B[:, 0], B[:, 1] = 1, -1
    F = CrossHorizonFixture(0, 1, 2, np.zeros((4, 2)), (B,), "custom")
    assert cross_implication(model.family, F, rng)["verdict"] == "violated"
    vectors = lift_family(model.family)
    assert vector_implication(vectors, embed(F, model.layout), rng)["verdict"] == "violated"


def test_joint_conditions_report_each_part(load, rng):
    model = load("binary_T2")
    fixtures = generate_fixtures(model.layout, rng, count=2)
    joint = derive_joint_fixtures(fixtures[0])
    for F in fixtures[1:]:
        joint.extend(derive_joint_fixtures(F))
    assert len(joint.cross) > 0
    result = check_joint_mptc(model.family, joint, rng)
    assert result["status"] == "pass"
    assert set(result["conditions"]) == {"process", "restricted_to_process", "cross_horizon"}


def test_non_product_fixtures_have_no_joint_counterpart(binary_layout, rng):
    F = generate_fixtures(binary_layout, rng, count=1, product=False)[0]
    assert F.family is not None
    assert len(derive_joint_fixtures(F)) == 0


def test_equivalence_harness_agrees_on_worst_case(load, rng):
    model = load("binary_T2")
    result = equivalence_harness(model.family, generate_fixtures(model.layout, rng, count=2), rng=rng)
    assert result["status"] == "pass"
    assert result["lift"]["joint_violations"] == 0


def test_equivalence_harness_agrees_on_a_violation(load, rng):
    model = load("broken_T2")
    X, Y = _pivot_pair()
    F = VectorFixture(0, 1, X, slots={0: (Y[0],), 1: (Y,)}, kind="min_preserving")
    result = equivalence_harness(model.family, [F], rng=rng)
    assert result["status"] == "pass"
    for side in ("lift", "project"):
        assert result[side]["joint_violations"] == 1
        assert result[side]["vector_violations"] == 1


def test_one_step_chain_walks_back_from_s(binary_layout, rng):
    F = process_fixtures(generate_fixtures(binary_layout, rng, count=1))[1]
    assert (F.t, F.s) == (0, 2)
    assert [(G.t, G.s) for G in one_step_chain(F)] == [(1, 2), (0, 1)]


def test_one_step_check(load, rng):
    model = load("binary_T2")
    fixtures = process_fixtures(generate_fixtures(model.layout, rng, count=2))
    result = check_one_step(model.family.process, fixtures, rng)
    assert result["status"] == "pass"
    assert result["fixtures"] == 2
    short = [F for F in fixtures if F.s == F.t + 1]
    assert check_one_step(model.family.process, short, rng)["status"] == "skipped"


def test_recursive_relation_on_worst_case(load, rng):
    model = load("binary_T2")
    result = check_recursive_relation(model.vectors, rng, samples=2, points=4)
    assert result["status"] in ("pass", "sampled")
    assert result["checked"] > 0
