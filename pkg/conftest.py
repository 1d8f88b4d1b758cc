import os

import numpy as np
import pytest

from acceptance import CellLayout
from config_loader import load_model, read_config
from space import build_space

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")

BINARY_STATES = ["uu", "ud", "du", "dd"]
BINARY_PARTITIONS = [
    [BINARY_STATES],
    [["uu", "ud"], ["du", "dd"]],
    [["uu"], ["ud"], ["du"], ["dd"]],
]


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def fixture_path():
    return lambda name: os.path.join(FIXTURE_DIR, f"{name}.json")


@pytest.fixture
def load(fixture_path):
    """Loads a shipped model file, with optional command-line style overrides."""
    return lambda name, **overrides: load_model(fixture_path(name), overrides)


@pytest.fixture
def raw_config(fixture_path):
    return lambda name: read_config(fixture_path(name))


@pytest.fixture
def two_state():
    """Omega = {u, dn}, T = 1, P = (1/2, 1/2), mu = 1/2."""
    return build_space(["u", "dn"], 1, [[["u", "dn"]], [["u"], ["dn"]]], {"u": 0.5, "dn": 0.5})


@pytest.fixture
def two_state_exact():
    return build_space(["u", "dn"], 1, [[["u", "dn"]], [["u"], ["dn"]]], {"u": "1/2", "dn": "1/2"}, exact=True)


@pytest.fixture
def binary():
    return build_space(BINARY_STATES, 2, BINARY_PARTITIONS, [0.25] * 4)


@pytest.fixture
def two_state_layout(two_state):
    return CellLayout(two_state, 1)


@pytest.fixture
def binary_layout(binary):
    return CellLayout(binary, 1)
