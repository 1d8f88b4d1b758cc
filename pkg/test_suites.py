import pytest

import polyhedra
import suites


@pytest.mark.parametrize("check_id", ["duality.process_outer_bound", "duality.dual_maps"])
def test_duality_checks_hold_on_the_two_state_model(load, check_id):
    result = suites.run_check(load("two_state_T1"), check_id, 0)
    assert result["status"] == "pass", result


def test_dual_maps_report_duals_outside_the_domain(load):
    result = suites.run_check(load("binary_T2"), "duality.dual_maps", 3)
    assert result["status"] == "pass", result
    assert result["duals"] > 0
    assert result["outside_domain"] >= 0


def test_process_axioms_on_restricted_horizons(load):
    result = suites.run_check(load("cross_horizon_T2"), "axioms.process", 0)
    assert result["status"] != "fail", result


def test_check_tolerance_is_scoped_to_the_run(load):
    model = load("two_state_T1", tolerance=1e-3)
    suites.run_check(model, "space.decomposition", 0)
    assert polyhedra.tolerance(False) == polyhedra.ABS_TOL
