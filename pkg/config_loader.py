import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from acceptance import (AcceptanceError, CellLayout, process_acceptance, restricted_acceptance,
                        vector_acceptance)
from bridge import AugmentedFamily, BridgeError, VectorFamily, lift_family, project_family
from riskproc import ProcessRiskMeasure
from riskvec import RestrictedRiskMeasure, VectorRiskMeasure
from space import OptionalSpace, ScenarioSpace, SpaceError, build_space, lift_space, validate_space_data

# ===========================
# 🔧 Configuration
# ===========================
FORMAT_VERSION = 1
MODES = ("float", "rational")
SUITES = ("space", "axioms", "equivalence", "duality", "consistency", "all")
DEFAULT_TOLERANCE = 1e-7
DEFAULT_DUALS = 20
DEFAULT_FIXTURES = 4
DEFAULT_RESTRICTED = {"family": "worst_case"}

logger = logging.getLogger("Config")


class ConfigError(ValueError):
    """Every problem found in a model file, each prefixed by its location."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True, eq=False)
class Model:
    name: str
    space: ScenarioSpace
    opt: OptionalSpace
    layout: CellLayout
    d: int
    m: int
    family: AugmentedFamily
    vectors: VectorFamily
    duals: int
    seed: int
    fixtures: int
    tolerance: float
    mode: str
    suite: str

    @property
    def exact(self) -> bool:
        return self.mode == "rational"


# ===========================
# 📥 Loading
# ===========================

def read_config(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise ConfigError([f"{path}: file not found"])
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError([f"{path}:{e.lineno}:{e.colno}: {e.msg}"])
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError([f"{path}: unreadable ({e})"])
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return raw


def _require(block: dict, key: str, kind, where: str, errors: List[str]):
    if key not in block:
        errors.append(f"{where}.{key}: missing")
        return None
    value = block[key]
    if kind is int and isinstance(value, bool):
        errors.append(f"{where}.{key}: expected an integer, got {value!r}")
        return None
    if not isinstance(value, kind):
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        errors.append(f"{where}.{key}: expected {name}, got {type(value).__name__}")
        return None
    return value


def _restricted_key(key: str, horizon: int) -> Optional[tuple]:
    """'t:s' names R_s^t; s < t <= T."""
    parts = key.split(":")
    if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
        return None
    t, s = int(parts[0]), int(parts[1])
    if not (0 <= s < t <= horizon):
        return None
    return t, s


def validate_config(raw: Dict[str, Any]) -> List[str]:
    """Structural problems of a parsed model file; scenario-tree invariants included."""
    errors = []
    version = raw.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        errors.append(f"format_version: unsupported version {version!r} (expected {FORMAT_VERSION})")

    space = _require(raw, "space", dict, "$", errors)
    assets = _require(raw, "assets", dict, "$", errors)
    risk = _require(raw, "risk", dict, "$", errors)
    if space is not None:
        states = _require(space, "states", list, "space", errors)
        horizon = _require(space, "horizon", int, "space", errors)
        partitions = _require(space, "partitions", list, "space", errors)
        prob = _require(space, "prob", (list, dict), "space", errors)
        if None not in (states, horizon, partitions, prob):
            dangling = []
            if isinstance(prob, dict):
                dangling += [f"space.prob.{name}: unknown state" for name in prob if name not in states]
                missing = [name for name in states if name not in prob]
                if missing:
                    dangling.append(f"space.prob: no weight for states {missing}")
            errors.extend(dangling)
            if not dangling:
                errors.extend(validate_space_data(states, horizon, partitions, prob, space.get("mu")))
    if assets is not None:
        d = _require(assets, "d", int, "assets", errors)
        m = _require(assets, "m", int, "assets", errors)
        if d is not None and m is not None and not (1 <= m <= d):
            errors.append(f"assets: need 1 <= m <= d, got m={m}, d={d}")
    if risk is not None:
        if "process" not in risk and "vector" not in risk:
            errors.append("risk: give a 'process' block (with optional 'restricted') or a 'vector' block")
        if "vector" in risk and ("process" in risk or "restricted" in risk):
            errors.append("risk: 'vector' cannot be combined with 'process' or 'restricted'")
        horizon = space.get("horizon") if isinstance(space, dict) else None
        if isinstance(horizon, int):
            for block in ("process", "vector"):
                for key in (risk.get(block) or {}):
                    if key != "default" and not (key.isdigit() and int(key) <= horizon):
                        errors.append(f"risk.{block}.{key}: expected 'default' or a time 0..{horizon}")
            for key in (risk.get("restricted") or {}):
                if key != "default" and _restricted_key(key, horizon) is None:
                    errors.append(f"risk.restricted.{key}: expected 'default' or 't:s' with s < t <= {horizon}")

    mode = raw.get("mode", "float")
    if mode not in MODES:
        errors.append(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")
    suite = raw.get("suite", "all")
    if suite not in SUITES:
        errors.append(f"suite: expected one of {', '.join(SUITES)}, got {suite!r}")
    tol = raw.get("tolerance", DEFAULT_TOLERANCE)
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or tol <= 0:
        errors.append(f"tolerance: expected a positive number, got {tol!r}")
    for block, key in (("duals", "count"), ("duals", "seed"), ("fixtures", "count")):
        value = (raw.get(block) or {}).get(key)
        if value is not None and (not isinstance(value, int) or isinstance(value, bool) or value < 0):
            errors.append(f"{block}.{key}: expected a nonnegative integer, got {value!r}")
    return errors


def _lookup(block: dict, key: str, default: Optional[dict], where: str) -> dict:
    spec = block.get(key, block.get("default", default))
    if spec is None:
        raise ConfigError([f"{where}.{key}: no entry and no default"])
    return spec


def build_model(raw: Dict[str, Any], name: str = "model", overrides: Optional[Dict[str, Any]] = None) -> Model:
    """Validated config to a Model; `overrides` carries command-line values (seed, tolerance, mode, suite)."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    merged = dict(raw)
    for key in ("tolerance", "mode", "suite"):
        if key in overrides:
            merged[key] = overrides[key]
    errors = validate_config(merged)
    if errors:
        raise ConfigError(errors)

    mode = merged.get("mode", "float")
    exact = mode == "rational"
    tolerance = float(merged.get("tolerance", DEFAULT_TOLERANCE))

    block = merged["space"]
    try:
        space = build_space(block["states"], block["horizon"], block["partitions"], block["prob"],
                            block.get("mu"), exact=exact)
    except SpaceError as e:
        raise ConfigError([str(e)])
    d, m = merged["assets"]["d"], merged["assets"]["m"]
    layout = CellLayout(space, d)
    risk = merged["risk"]

    try:
        if "vector" in risk:
            measures = {}
            for t in space.times:
                spec = _lookup(risk["vector"], str(t), None, "risk.vector")
                measures[t] = VectorRiskMeasure(vector_acceptance(layout, t, spec, path=f"risk.vector.{t}"), m)
            vectors = VectorFamily(space, layout, m, measures)
            family = project_family(vectors)
        else:
            process = {}
            for t in space.times:
                spec = _lookup(risk["process"], str(t), None, "risk.process")
                process[t] = ProcessRiskMeasure(process_acceptance(layout, t, spec, path=f"risk.process.{t}"), m)
            restricted = {}
            block = risk.get("restricted") or {}
            for t in range(1, space.horizon + 1):
                for s in range(t):
                    key = f"{t}:{s}"
                    spec = _lookup(block, key, DEFAULT_RESTRICTED, "risk.restricted")
                    acc = restricted_acceptance(layout, s, spec, horizon=t, path=f"risk.restricted.{key}")
                    restricted[(s, t)] = RestrictedRiskMeasure(acc, m)
            family = AugmentedFamily(space, layout, m, process, restricted)
            vectors = lift_family(family)
    except (AcceptanceError, BridgeError) as e:
        raise ConfigError([str(e)])

    duals = merged.get("duals") or {}
    seed = overrides.get("seed", duals.get("seed", 0))
    model = Model(
        name=merged.get("name", name),
        space=space,
        opt=lift_space(space),
        layout=layout,
        d=d,
        m=m,
        family=family,
        vectors=vectors,
        duals=duals.get("count", DEFAULT_DUALS),
        seed=seed,
        fixtures=(merged.get("fixtures") or {}).get("count", DEFAULT_FIXTURES),
        tolerance=tolerance,
        mode=mode,
        suite=merged.get("suite", "all"),
    )
    logger.info(f"✅ Loaded model '{model.name}': {space.n_states} states, T={space.horizon}, "
                f"d={d}, m={m}, mode={mode}")
    return model


def load_model(path: str, overrides: Optional[Dict[str, Any]] = None) -> Model:
    raw = read_config(path)
    name = os.path.splitext(os.path.basename(path))[0]
    try:
        return build_model(raw, name, overrides)
    except ConfigError as e:
        logger.error(f"❌ {path}: {len(e.errors)} config error(s)")
        raise
