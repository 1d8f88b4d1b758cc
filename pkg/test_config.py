from fractions import Fraction

import numpy as np
import pytest

import polyhedra
from config_loader import ConfigError, build_model, read_config, validate_config

WORST = {"family": "worst_case"}


def test_shipped_model_loads(load):
    model = load("two_state_T1")
    assert model.name == "two_state_T1"
    assert (model.space.horizon, model.d, model.m) == (1, 1, 1)
    assert model.suite == "all"
    assert model.seed == 0
    assert model.duals == 10
    assert set(model.family.restricted) == {(0, 1)}
    assert set(model.vectors.measures) == {0, 1}


def test_restricted_entries_by_horizon(load):
    model = load("cross_horizon_T2")
    assert set(model.family.restricted) == {(0, 1), (0, 2), (1, 2)}
    assert model.family.restricted[(0, 2)].acceptance.is_cone
    assert model.family.restricted[(0, 2)].acceptance.G.shape[0] == 1


def test_overrides_win_over_the_file(load):
    model = load("two_state_T1", seed=7, suite="duality")
    assert model.seed == 7
    assert model.suite == "duality"
    assert model.tolerance == 1e-7


def test_model_tolerance_stays_with_the_model(load):
    model = load("two_state_T1", tolerance=1e-3)
    assert model.tolerance == 1e-3
    assert polyhedra.tolerance(False) == polyhedra.ABS_TOL
    assert load("two_state_T1").tolerance == 1e-7


def test_rational_mode_builds_exact_space(load):
    model = load("two_state_T1", mode="rational")
    assert model.exact
    assert model.space.exact
    assert list(model.space.prob) == [Fraction(1, 2), Fraction(1, 2)]


def test_vector_block_is_projected(raw_config):
    raw = raw_config("two_state_T1")
    raw["risk"] = {"vector": {"default": WORST}}
    model = build_model(raw, "vector_only")
    assert set(model.family.restricted) == {(0, 1)}
    X = np.zeros((2, 2, 1))
    X[1, :, 0] = [2, -1]
    label = model.family.process[0].labels()[0]
    assert polyhedra.equals(model.family.process[0](X).piece(label), polyhedra.orthant(1, [1]))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="file not found"):
        read_config(str(tmp_path / "absent.json"))


def test_json_errors_carry_line_and_column(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "space": ,\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        read_config(str(path))
    assert info.value.errors[0].startswith(f"{path}:2:")


def test_top_level_must_be_an_object(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError, match="must be an object"):
        read_config(str(path))


def test_mu_must_sum_to_one(raw_config):
    raw = raw_config("two_state_T1")
    raw["space"]["mu"] = [{"up": 0.45, "down": 0.45}, {"up": 0.45, "down": 0.45}]
    with pytest.raises(ConfigError, match="sum to 0.9"):
        build_model(raw)


def test_partitions_must_refine(raw_config):
    raw = raw_config("binary_T2")
    raw["space"]["partitions"][2] = [["uu", "du"], ["ud"], ["dd"]]
    errors = validate_config(raw)
    assert any("space.partitions" in e for e in errors)


def test_bad_restricted_key(raw_config):
    raw = raw_config("binary_T2")
    raw["risk"]["restricted"]["0:1"] = WORST
    errors = validate_config(raw)
    assert errors == ["risk.restricted.0:1: expected 'default' or 't:s' with s < t <= 2"]


def test_vector_block_excludes_process_blocks(raw_config):
    raw = raw_config("binary_T2")
    raw["risk"]["vector"] = {"default": WORST}
    assert "risk: 'vector' cannot be combined with 'process' or 'restricted'" in validate_config(raw)


def test_eligible_assets_bounded_by_d(raw_config):
    raw = raw_config("two_state_T1")
    raw["assets"]["m"] = 2
    with pytest.raises(ConfigError, match="need 1 <= m <= d"):
        build_model(raw)


def test_every_problem_is_reported(raw_config):
    raw = raw_config("two_state_T1")
    raw["mode"] = "symbolic"
    raw["tolerance"] = -1
    raw["duals"]["count"] = "many"
    errors = validate_config(raw)
    assert len(errors) == 3
    assert errors[0].startswith("mode:")


def test_unknown_family_surfaces_as_config_error(raw_config):
    raw = raw_config("two_state_T1")
    raw["risk"]["process"]["1"] = {"family": "median"}
    with pytest.raises(ConfigError, match="unknown family"):
        build_model(raw)
