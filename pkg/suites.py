import logging
import os
import tempfile
import zlib
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

import check_queue
import consistency
import polyhedra
import worker
from acceptance import row_field, tail_field
from bridge import (dual_round_trip, full_eligible_simplify, lift_acceptance, lift_family, map_dual_to_process,
                    map_dual_to_vector, maps_to_process_dual, max_dual_correspondence, penalty_decompose_check,
                    penalty_reverse_check, project_acceptance, reconstruct)
from config_loader import FORMAT_VERSION, Model
from riskproc import (DualError, axioms_hold, check_axioms_process, dirac_duals_process, dual_eval_process,
                      dual_term_process, is_max_dual_process, penalty_process, properties, sample_process_duals,
                      validate_process_dual)
from riskvec import (check_axioms_restricted, check_axioms_vector, check_time_decomposable, dirac_duals_vector,
                     dual_eval_vector, dual_term_vector, is_max_dual_vector, penalty_vector, sample_vector_duals,
                     validate_vector_dual)
from space import (ARITH_TOL, adapted_field, as_floats, bar_cond_expectation, close, compose, cond_expectation,
                   decompose, draw, label_states, positive, random_density, random_optional_measure, to_number,
                   zeros)

# ===========================
# 🔧 Configuration
# ===========================
STATUSES = ("pass", "fail", "sampled", "skipped")
TEST_VECTORS = 20
AXIOM_SAMPLES = 8
ACCEPTANCE_SAMPLES = 200
OUTER_POSITIONS = 3

logger = logging.getLogger("Suites")


@dataclass(frozen=True)
class CheckSpec:
    id: str
    suite: str
    anchor: str
    inputs: str
    procedure: str
    run: Callable[[Model, np.random.Generator], dict]


def check_rng(seed: int, check_id: str) -> np.random.Generator:
    """Independent stream per check so results do not depend on scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(check_id.encode("utf-8"))]))


def worst(statuses) -> str:
    statuses = list(statuses)
    for status in ("fail", "sampled", "pass"):
        if status in statuses:
            return status
    return "skipped"


def _adapted_process(model: Model, rng: np.random.Generator) -> np.ndarray:
    space = model.space
    return np.stack([adapted_field(space, rng, r, 1)[:, 0] for r in space.times])


# ===========================
# 🌳 Scenario Space
# ===========================

def run_decomposition(model: Model, rng: np.random.Generator) -> dict:
    space, opt = model.space, model.opt
    exact = space.exact
    T, N = space.horizon, space.n_states
    largest = 0.0
    for k in range(model.duals):
        raw = draw(rng, 0.0, 1.0, (T + 1, N), exact)
        if k % 3 == 1:
            raw[rng.random((T + 1, N)) < 0.3] = to_number(0, exact)
        if not positive(raw.sum(), exact):
            raw[T, 0] = to_number(1, exact)
        weights = raw / raw.sum()
        Qbar = decompose(opt, weights)
        masses = Qbar.masses()
        for r in space.times:
            for a in range(len(space.partitions[r])):
                idx = space.members(r, a)
                if not close(masses[r, idx].sum(), weights[r, idx].sum(), exact):
                    return {"status": "fail", "witness": {"sample": k, "cell": [r, a], "weights": as_floats(weights),
                                                          "q": as_floats(Qbar.q), "psi": as_floats(Qbar.psi)}}
        again = compose(space, Qbar.q, Qbar.psi)
        if not (close(again.q, Qbar.q, exact, 1e-12) and close(again.psi, Qbar.psi, exact, 1e-12)):
            return {"status": "fail", "witness": {"sample": k, "reason": "compose(decompose) moved the factors",
                                                  "q": as_floats(Qbar.q), "psi": as_floats(Qbar.psi)}}
        for _ in range(TEST_VECTORS):
            X = _adapted_process(model, rng)
            lhs = (weights * X).sum()
            rhs = (space.prob * Qbar.q * (Qbar.psi * X).sum(axis=0)).sum()
            gap = abs(float(lhs - rhs))
            largest = max(largest, gap)
            if (exact and lhs != rhs) or gap >= ARITH_TOL:
                return {"status": "fail", "witness": {"sample": k, "X": as_floats(X), "gap": gap}}
    return {"status": "pass", "samples": model.duals, "vectors": TEST_VECTORS, "largest_gap": largest}


def run_conditional_expectation(model: Model, rng: np.random.Generator) -> dict:
    space, opt = model.space, model.opt
    exact = space.exact
    compared = 0
    for k in range(model.duals):
        t = int(rng.integers(space.horizon + 1))
        Qbar = random_optional_measure(space, rng, t=0, null_prob=0.3, exhaust_prob=0.2)
        X = _adapted_process(model, rng)
        value = bar_cond_expectation(opt, X, Qbar, t)
        masses = Qbar.masses()
        for label in space.future_labels(t):
            idx = label_states(space, label)
            total = masses[t:, idx].sum()
            if not positive(total, exact):
                continue
            direct = (masses[t:, idx] * X[t:, idx]).sum() / total
            compared += 1
            if not close(value[t, idx[0]], direct, exact):
                return {"status": "fail", "witness": {"sample": k, "t": t, "atom": label.index,
                                                      "formula": float(value[t, idx[0]]), "direct": float(direct)}}
    return {"status": "pass", "samples": model.duals, "atoms_compared": compared}


def run_density_ratio(model: Model, rng: np.random.Generator) -> dict:
    space = model.space
    exact = space.exact
    compared = 0
    for k in range(model.duals):
        t = int(rng.integers(space.horizon + 1))
        Q = random_density(space, rng, t=0, null_prob=0.3)
        X = adapted_field(space, rng, space.horizon, 1)[:, 0]
        value = cond_expectation(space, X, Q, t)
        for a in range(len(space.partitions[t])):
            idx = space.members(t, a)
            mass = (space.prob[idx] * Q[idx]).sum()
            if not positive(mass, exact):
                continue
            direct = (space.prob[idx] * Q[idx] * X[idx]).sum() / mass
            compared += 1
            if not close(value[idx[0]], direct, exact):
                return {"status": "fail", "witness": {"sample": k, "t": t, "atom": a,
                                                      "formula": float(value[idx[0]]), "direct": float(direct)}}
    return {"status": "pass", "samples": model.duals, "atoms_compared": compared}


# ===========================
# 🧪 Axioms
# ===========================

def _axiom_summary(reports: Dict[str, dict]) -> dict:
    statuses = {name: {axiom: item["status"] for axiom, item in rep.items()} for name, rep in reports.items()}
    broken = [name for name, rep in reports.items() if not axioms_hold(rep)]
    out = {"status": "fail" if broken else "pass", "measures": statuses}
    if broken:
        rep = reports[broken[0]]
        axiom = next(a for a, item in rep.items() if item["status"] == "fail")
        out["witness"] = {"measure": broken[0], "axiom": axiom, **rep[axiom].get("witness", {})}
    return out


def run_axioms_process(model: Model, rng: np.random.Generator) -> dict:
    family = model.family
    reports = {f"rho_{t}": check_axioms_process(family.process[t], rng, AXIOM_SAMPLES) for t in model.space.times}
    for (s, t), R in sorted(family.restricted.items()):
        reports[f"R_{s}^{t}"] = check_axioms_restricted(R, rng, AXIOM_SAMPLES)
    return _axiom_summary(reports)


def run_axioms_vector(model: Model, rng: np.random.Generator) -> dict:
    reports = {f"Rbar_{t}": check_axioms_vector(model.vectors[t], rng, AXIOM_SAMPLES) for t in model.space.times}
    return _axiom_summary(reports)


def run_inheritance(model: Model, rng: np.random.Generator) -> dict:
    family = model.family
    lifted = lift_family(family)
    mismatches, compared = [], 0
    for t in model.space.times:
        parts = [properties(check_axioms_process(family.process[t], rng, AXIOM_SAMPLES))]
        parts += [properties(check_axioms_restricted(family.restricted[(s, t)], rng, AXIOM_SAMPLES)) for s in range(t)]
        whole = properties(check_axioms_vector(lifted[t], rng, AXIOM_SAMPLES))
        for name, verdict in whole.items():
            pieces = [p[name] for p in parts]
            if verdict is None or None in pieces:
                continue
            compared += 1
            if verdict != all(pieces):
                mismatches.append({"t": t, "property": name, "lifted": verdict, "components": pieces})
    if mismatches:
        return {"status": "fail", "compared": compared, "witness": mismatches[0]}
    return {"status": "pass" if compared else "skipped", "compared": compared}


# ===========================
# 🔗 Primal Equivalence
# ===========================

def _decomposable(model: Model, t: int, rng: np.random.Generator) -> bool:
    A = model.vectors[t].acceptance
    return A.decomposable or check_time_decomposable(A, model.m, rng, 5)["status"] == "pass"


def run_lift_project(model: Model, rng: np.random.Generator) -> dict:
    family, m = model.family, model.m
    lifted = lift_family(family)
    mismatches, skipped = [], []
    for t in model.space.times:
        restricted, process = project_acceptance(lifted[t].acceptance, m, use_cache=False)
        for R, Rp in zip(family.aug(t).restricted, restricted):
            if not polyhedra.equals(R.acceptance.polyhedron(), Rp.polyhedron()):
                mismatches.append({"direction": "project(lift)", "t": t, "restricted": R.time})
        if not polyhedra.equals(family.process[t].acceptance.polyhedron(), process.polyhedron()):
            mismatches.append({"direction": "project(lift)", "t": t, "process": t})

        if not _decomposable(model, t, rng):
            skipped.append(t)
            continue
        A = model.vectors[t].acceptance
        restricted, process = project_acceptance(A, m, use_cache=False)
        relifted = lift_acceptance(restricted, process)
        if not polyhedra.equals(relifted.polyhedron(), A.polyhedron()):
            mismatches.append({"direction": "lift(project)", "t": t})
            continue
        for _ in range(OUTER_POSITIONS):
            X = A.random_position(rng)
            if not polyhedra.equals(A.evaluate(X, m), relifted.evaluate(X, m)):
                mismatches.append({"direction": "lift(project)", "t": t, "X": as_floats(X)})
                break
    out = {"status": "fail" if mismatches else "pass", "not_decomposable": skipped}
    if mismatches:
        out["witness"] = mismatches[0]
    return out


def run_acceptance(model: Model, rng: np.random.Generator) -> dict:
    space, m = model.space, model.m
    mismatches, tested = [], 0
    for t in space.times:
        if not _decomposable(model, t, rng):
            continue
        A = model.vectors[t].acceptance
        restricted, process = project_acceptance(A, m, use_cache=False)
        aug = model.family.aug(t)
        for _ in range(ACCEPTANCE_SAMPLES // (space.horizon + 1)):
            X = A.random_position(rng, -1.0, 2.0)
            whole = A.contains(X)
            parts = all(R.acceptance.contains(row_field(space, X[R.time], R.time)) for R in aug.restricted)
            parts = parts and aug.process.acceptance.contains(tail_field(X, t))
            projected = all(Rp.contains(row_field(space, X[Rp.time], Rp.time)) for Rp in restricted)
            projected = projected and process.contains(tail_field(X, t))
            tested += 1
            if not (whole == parts == projected):
                mismatches.append({"t": t, "X": as_floats(X), "lifted": whole, "components": parts,
                                   "projected": projected})
    if not tested:
        return {"status": "skipped", "reason": "no time-decomposable vector measure"}
    out = {"status": "fail" if mismatches else "pass", "positions": tested, "disagreements": len(mismatches)}
    if mismatches:
        out["witness"] = mismatches[0]
    return out


def run_full_eligible(model: Model, rng: np.random.Generator) -> dict:
    if model.m < model.d:
        return {"status": "skipped", "reason": f"only {model.m} of {model.d} assets eligible"}
    compared = 0
    for t in model.space.times:
        if not _decomposable(model, t, rng):
            continue
        rbar = model.vectors[t]
        C, rho = full_eligible_simplify(rbar)
        for _ in range(OUTER_POSITIONS):
            X = rbar.acceptance.random_position(rng)
            compared += 1
            if not polyhedra.equals(reconstruct(C, rho, X), rbar(X)):
                return {"status": "fail", "witness": {"t": t, "X": as_floats(X)}}
    return {"status": "pass" if compared else "skipped", "positions": compared}


# ===========================
# 🪞 Duality
# ===========================

def run_process_outer_bound(model: Model, rng: np.random.Generator) -> dict:
    space, d, m = model.space, model.d, model.m
    tested = 0
    for t in space.times:
        rho = model.family.process[t]
        A = rho.acceptance
        positions = [A.random_position(rng) for _ in range(OUTER_POSITIONS)]
        values = [rho(X) for X in positions]
        duals = dirac_duals_process(space, t, d, m) + sample_process_duals(space, rng, t, d, m, model.duals)
        for k, Qw in enumerate(duals):
            penalty = penalty_process(A, Qw, m)
            for X, value in zip(positions, values):
                tested += 1
                if not polyhedra.subset_of(value, dual_term_process(A, X, Qw, m, penalty)):
                    return {"status": "fail", "witness": {"t": t, "dual": Qw.as_dict(), "X": as_floats(X)}}
    return {"status": "pass", "pairs": tested}


def run_vector_outer_bound(model: Model, rng: np.random.Generator) -> dict:
    space, d, m = model.space, model.d, model.m
    tested = 0
    for t in space.times:
        rbar = model.vectors[t]
        A = rbar.acceptance
        positions = [A.random_position(rng) for _ in range(OUTER_POSITIONS)]
        values = [rbar(X) for X in positions]
        duals = dirac_duals_vector(space, t, d, m) + sample_vector_duals(space, rng, t, d, m, model.duals)
        for Qw in duals:
            penalty = penalty_vector(A, Qw, m)
            for X, value in zip(positions, values):
                tested += 1
                if not polyhedra.subset_of(value, dual_term_vector(A, X, Qw, m, penalty)):
                    return {"status": "fail", "witness": {"t": t, "dual": Qw.as_dict(), "X": as_floats(X)}}
    return {"status": "pass", "pairs": tested}


def _worst_case(A) -> bool:
    parts = getattr(A, "parts", None)
    if parts is not None:
        return all(part.name == "worst_case" for part in parts)
    return A.name == "worst_case"


def run_coherent_exactness(model: Model, rng: np.random.Generator) -> dict:
    """Dirac and sampled maximal duals against the primal value, for conditionally coherent sets."""
    space, d, m = model.space, model.d, model.m
    verdicts, strict_misses = [], []
    for t in space.times:
        sides = (
            ("process", model.family.process[t], dirac_duals_process(space, t, d, m)
             + sample_process_duals(space, rng, t, d, m, model.duals), is_max_dual_process, dual_eval_process),
            ("vector", model.vectors[t], dirac_duals_vector(space, t, d, m)
             + sample_vector_duals(space, rng, t, d, m, model.duals), is_max_dual_vector, dual_eval_vector),
        )
        for side, measure, duals, is_max, dual_eval in sides:
            A = measure.acceptance
            if not A.is_cone:
                continue
            maximal = [dual for dual in duals if is_max(A, dual)[0]]
            strict = _worst_case(A) and m == d
            for _ in range(OUTER_POSITIONS):
                X = A.random_position(rng)
                tight = polyhedra.equals(measure(X), dual_eval(A, X, maximal, m))
                verdicts.append("pass" if tight else ("fail" if strict else "sampled"))
                if not tight and strict:
                    strict_misses.append({"side": side, "t": t, "X": as_floats(X), "duals": len(maximal)})
    if not verdicts:
        return {"status": "skipped", "reason": "no conditionally coherent acceptance set"}
    out = {"status": worst(verdicts), "positions": len(verdicts),
           "tight": verdicts.count("pass")}
    if strict_misses:
        out["witness"] = strict_misses[0]
    return out


def run_penalty_decomposition(model: Model, rng: np.random.Generator) -> dict:
    space, d, m = model.space, model.d, model.m
    tested = 0
    for t in space.times:
        aug = model.family.aug(t)
        for dual in sample_vector_duals(space, rng, t, d, m, model.duals):
            tested += 1
            result = penalty_decompose_check(aug, dual)
            if result["status"] == "fail":
                return {"status": "fail", "witness": {"direction": "decompose", "t": t, "dual": dual.as_dict(),
                                                      **result["witness"]}}
        for Qw in sample_process_duals(space, rng, t, d, m, model.duals):
            weights = {s: adapted_field(space, rng, s, d, 0.0, 1.0) for s in range(t)}
            tested += 1
            result = penalty_reverse_check(aug, Qw, weights)
            if result["status"] == "fail":
                failed = {key: item for key, item in result["parts"].items() if item["status"] == "fail"}
                return {"status": "fail", "witness": {"direction": "reverse", "t": t, "dual": Qw.as_dict(),
                                                      "parts": failed}}
    return {"status": "pass", "pairs": tested}


def run_dual_maps(model: Model, rng: np.random.Generator) -> dict:
    space, opt, d, m = model.space, model.opt, model.d, model.m
    tested, outside = 0, 0
    for t in space.times:
        for Qw in sample_process_duals(space, rng, t, d, m, model.duals):
            tested += 1
            ok, witness = dual_round_trip(opt, Qw)
            if not ok:
                return {"status": "fail", "witness": {"t": t, "dual": Qw.as_dict(), **witness}}
            try:
                validate_vector_dual(opt, map_dual_to_vector(opt, Qw), m)
            except DualError as e:
                return {"status": "fail",
                        "witness": {"t": t, "map": "to_vector", "error": str(e), "dual": Qw.as_dict()}}
        for dual in sample_vector_duals(space, rng, t, d, m, model.duals):
            if not maps_to_process_dual(dual, m):
                outside += 1
                continue
            tested += 1
            try:
                validate_process_dual(space, map_dual_to_process(opt, dual), m)
            except DualError as e:
                return {"status": "fail", "witness": {"t": t, "map": "to_process", "error": str(e),
                                                      "dual": dual.as_dict()}}
    return {"status": "pass", "duals": tested, "outside_domain": outside}


def run_max_dual(model: Model, rng: np.random.Generator) -> dict:
    space, d, m = model.space, model.d, model.m
    results = []
    for t in space.times:
        aug = model.family.aug(t)
        parts = [R.acceptance for R in aug.restricted] + [aug.process.acceptance]
        if not all(A.is_cone for A in parts):
            continue
        result = max_dual_correspondence(aug, sample_vector_duals(space, rng, t, d, m, model.duals),
                                         sample_process_duals(space, rng, t, d, m, model.duals))
        result["t"] = t
        results.append(result)
    if not results:
        return {"status": "skipped", "reason": "no time with conditionally coherent components"}
    out = {"status": worst(r["status"] for r in results), "times": [r["t"] for r in results],
           "samples": sum(r["samples"] for r in results)}
    for r in results:
        if "witness" in r:
            out["witness"] = {"t": r["t"], **r["witness"]}
            break
    return out


# ===========================
# ⏳ Time Consistency
# ===========================

def _fixtures(model: Model, rng: np.random.Generator, product: bool = True) -> List[consistency.VectorFixture]:
    return consistency.generate_fixtures(model.layout, rng, model.fixtures, product=product)


def _normalized(model: Model, rng: np.random.Generator) -> bool:
    space = model.space
    zero = zeros((space.horizon + 1, space.n_states, model.d), space.exact)
    for t in space.times:
        rbar = model.vectors[t]
        at_zero = rbar(zero)
        if at_zero.coupling is not None:
            return False
        if not polyhedra.contains_point(at_zero, {label: [0] * model.m for label in at_zero.labels}):
            return False
        for _ in range(3):
            value = rbar(rbar.acceptance.random_position(rng))
            if value.coupling is not None or not polyhedra.equals(polyhedra.minkowski_sum(value, at_zero), value):
                return False
    return True


def run_mptc_process(model: Model, rng: np.random.Generator) -> dict:
    fixtures = consistency.process_fixtures(_fixtures(model, rng))
    return consistency.check_mptc_process(model.family.process, fixtures, rng)


def run_mptc_vector(model: Model, rng: np.random.Generator) -> dict:
    product = consistency.check_mptc_vector(model.vectors, _fixtures(model, rng), rng)
    if _decomposable_all(model, rng) and _normalized(model, rng):
        unrestricted = consistency.check_mptc_vector(model.vectors, _fixtures(model, rng, product=False), rng)
    else:
        unrestricted = {"status": "skipped", "reason": "needs a normalized time-decomposable family"}
    out = {"status": worst([product["status"], unrestricted["status"]]), "product": product,
           "unrestricted": unrestricted}
    for part in (product, unrestricted):
        if "witness" in part:
            out["witness"] = part["witness"]
            break
    return out


def _decomposable_all(model: Model, rng: np.random.Generator) -> bool:
    return all(_decomposable(model, t, rng) for t in model.space.times)


def run_joint_mptc(model: Model, rng: np.random.Generator) -> dict:
    joint = consistency.JointFixtures()
    for F in _fixtures(model, rng):
        joint.extend(consistency.derive_joint_fixtures(F))
    return consistency.check_joint_mptc(model.family, joint, rng)


def run_equivalence_harness(model: Model, rng: np.random.Generator) -> dict:
    if not _decomposable_all(model, rng):
        return {"status": "skipped", "reason": "vector family is not time decomposable"}
    return consistency.equivalence_harness(model.family, _fixtures(model, rng), model.vectors, rng)


def run_one_step(model: Model, rng: np.random.Generator) -> dict:
    if model.space.horizon < 2:
        return {"status": "skipped", "reason": "a single period has no intermediate times"}
    fixtures = consistency.process_fixtures(_fixtures(model, rng))
    return consistency.check_one_step(model.family.process, fixtures, rng)


def run_recursive_relation(model: Model, rng: np.random.Generator) -> dict:
    return consistency.check_recursive_relation(model.vectors, rng)


# ===========================
# 📋 Registry
# ===========================

REGISTRY: Tuple[CheckSpec, ...] = (
    CheckSpec("space.decomposition", "space",
              "Every measure on the optional space factors as a measure Q on the scenarios times an adapted "
              "random measure psi over times, and composing the factors returns the measure.",
              "random optional weights (some cells zeroed), random adapted processes",
              "decompose, compare cell totals, re-compose, then compare E-bar^Q-bar[X] with E^Q[sum_t psi_t X_t]",
              run_decomposition),
    CheckSpec("space.conditional_expectation", "space",
              "Given F-bar_t, the Q-bar conditional expectation is the realized value on past cells and a "
              "psi-weighted Q-average over the frozen block D x T_t.",
              "random optional measures with null and exhausted branches, random adapted processes",
              "closed-form conditional expectation against mass-weighted averages on Q-bar-positive atoms",
              run_conditional_expectation),
    CheckSpec("space.density_ratio", "space",
              "E^Q_t[X] = E_t[xi_(t,T)(Q) X] with xi the ratio of conditional densities, set to 1 where the "
              "denominator vanishes.",
              "random densities with null states, random F_T-measurable vectors",
              "density-ratio formula against direct Q-weighted averages on Q-positive atoms",
              run_density_ratio),
    CheckSpec("axioms.process", "axioms",
              "A risk measure for processes is determined by its acceptance set, is M-translative, monotone "
              "and finite at zero; restricted measures likewise on F_s-measurable vectors.",
              "rho_t for every t and R_s^t for every s < t",
              "sampled positions, capital shifts and dominated pairs; normalized/convex/coherent reported",
              run_axioms_process),
    CheckSpec("axioms.vector", "axioms",
              "The optional-space measures R-bar_t satisfy the same axioms on F-bar_t-measurable vectors and "
              "split over realized times and the frozen block.",
              "R-bar_t for every t",
              "same sampler as axioms.process plus the time-decomposition comparison",
              run_axioms_vector),
    CheckSpec("axioms.inheritance", "axioms",
              "The lifted measure is normalized, convex or coherent exactly when rho_t and every R_s^t are.",
              "the augmented family and its lift",
              "property verdicts of the components against those of the lift, skipped ones ignored",
              run_inheritance),
    CheckSpec("equivalence.lift_project", "equivalence",
              "Augmented measures on processes and time-decomposable measures on the optional space are in "
              "bijection: lift then project and project then lift are identities.",
              "the augmented family; the vector family when time decomposable",
              "acceptance polyhedra compared by mutual-subset LPs; risk values compared atom by atom",
              run_lift_project),
    CheckSpec("equivalence.acceptance", "equivalence",
              "A-bar_t = sum_s A_(R_s) 1_s + A_t 1_(T_t).",
              f"{ACCEPTANCE_SAMPLES} random positions per model",
              "membership in the lifted set, in its components, and in the projected components must agree",
              run_acceptance),
    CheckSpec("equivalence.full_eligible", "equivalence",
              "With every asset eligible, R-bar_t(X) = sum_s (-X_s + C_s) 1_s + rho_t(X 1_(T_t)) 1_(T_t) with "
              "C_s = R-bar_t(0) on the cells of s.",
              "time-decomposable vector measures with m = d",
              "reconstructed values against direct evaluation",
              run_full_eligible),
    CheckSpec("duality.process_outer_bound", "duality",
              "rho_t(X) is the intersection over dual variables (Q, w) of the halfspace from w.E^Q[X] shifted "
              "by the minimal penalty; any finite family gives an outer bound.",
              "Dirac and sampled process dual variables, random positions",
              "rho_t(X) within every dual term, certified by one LP per facet",
              run_process_outer_bound),
    CheckSpec("duality.vector_outer_bound", "duality",
              "R-bar_t(X) is the intersection over (Q-bar, w-bar) of the penalized halfspaces on the optional "
              "space.",
              "Dirac and sampled optional-space dual variables, random vectors",
              "R-bar_t(X) within every dual term",
              run_vector_outer_bound),
    CheckSpec("duality.coherent_exactness", "duality",
              "For conditionally coherent measures the penalty vanishes on maximal duals and the dual "
              "intersection reproduces the measure.",
              "cone acceptance sets; Dirac and sampled duals filtered to maximal ones",
              "set equality with the dual intersection; a miss is a failure for worst-case sets with m = d "
              "and a sampled verdict otherwise",
              run_coherent_exactness),
    CheckSpec("duality.penalty_decomposition", "duality",
              "alpha-bar_t(Q-bar, w-bar) = sum_s alpha_(R_s)(w-bar_s) 1_s + alpha_t(W_t(Q-bar, w-bar)) 1_(T_t), "
              "and back through W-bar_t.",
              "sampled vector and process duals for every t",
              "penalties on both sides compared atom by atom",
              run_penalty_decomposition),
    CheckSpec("duality.dual_maps", "duality",
              "W_t and W-bar_t map admissible duals to admissible duals and w_t^s(Q_s, w_s) survives the round "
              "trip.",
              "sampled process and vector duals",
              "admissibility validators on the images, componentwise comparison of w_t^s",
              run_dual_maps),
    CheckSpec("duality.max_dual", "duality",
              "(Q-bar, w-bar) is maximal for the lift iff every w-bar_s is maximal for R_s and W_t(Q-bar, w-bar) "
              "for rho_t.",
              "cone components only",
              "maximality LPs on both sides",
              run_max_dual),
    CheckSpec("consistency.process", "consistency",
              "Multiportfolio time consistency: rho_s(X) within the union of rho_s(Y) over Y in B implies the "
              "same at t after any Z on [t, s).",
              "generated fixtures: reflexive, min-preserving, dominated, random unions",
              "exact union inclusion by facet-avoidance search, sampled past the LP budget",
              run_mptc_process),
    CheckSpec("consistency.vector", "consistency",
              "The same implication for R-bar with product-form comparison families, and with arbitrary "
              "finite families for normalized time-decomposable measures.",
              "product and unrestricted fixtures",
              "union inclusion on the optional space; the worse of the two variants is reported",
              run_mptc_vector),
    CheckSpec("consistency.joint", "consistency",
              "Joint consistency of (rho, R): consistency of rho, restricted-to-process, and across horizons.",
              "joint fixtures derived from product fixtures",
              "the three implications, reported per condition",
              run_joint_mptc),
    CheckSpec("consistency.equivalence", "consistency",
              "(rho, R) is jointly consistent iff its lift is consistent; R-bar is consistent iff its "
              "projection is jointly consistent.",
              "product fixtures, their derived joint fixtures and embedded vector fixtures",
              "verdicts compared fixture by fixture in both directions",
              run_equivalence_harness),
    CheckSpec("consistency.one_step", "consistency",
              "Single-period consistency suffices: a multi-period violation shows on a one-step link.",
              "process fixtures spanning two or more periods",
              "direct verdict against the chain of (u, u+1) fixtures",
              run_one_step),
    CheckSpec("consistency.recursive_relation", "consistency",
              "For normalized consistent families R-bar_t(X) is the union of R-bar_t(-Z) over Z in R-bar_s(X).",
              "random vectors; vertices and sampled points of R-bar_s(X)",
              "each R-bar_t(-Z) within R-bar_t(X) exactly; covering of R-bar_t(X) sampled",
              run_recursive_relation),
)

CHECKS: Dict[str, CheckSpec] = {spec.id: spec for spec in REGISTRY}


def select(suite: str) -> List[CheckSpec]:
    if not suite:
        raise ValueError("empty suite selection")
    if suite == "all":
        return list(REGISTRY)
    chosen = [spec for spec in REGISTRY if spec.suite == suite]
    if not chosen:
        known = sorted({spec.suite for spec in REGISTRY} | {"all"})
        raise ValueError(f"unknown suite {suite!r} (known: {', '.join(known)})")
    return chosen


def explain(check_id: str) -> str:
    if check_id not in CHECKS:
        raise KeyError(f"unknown check {check_id!r}; valid ids: {', '.join(CHECKS)}")
    spec = CHECKS[check_id]
    return "\n".join([
        f"{spec.id}  [{spec.suite}]",
        f"  anchor:    {spec.anchor}",
        f"  inputs:    {spec.inputs}",
        f"  procedure: {spec.procedure}",
    ])


# ===========================
# 🏃 Running
# ===========================

def run_check(model: Model, check_id: str, seed: int) -> dict:
    spec = CHECKS[check_id]
    with polyhedra.tolerance_scope(model.tolerance):
        result = spec.run(model, check_rng(seed, check_id))
    if result.get("status") not in STATUSES:
        raise ValueError(f"check {check_id} returned status {result.get('status')!r}")
    return result


def build_report(model: Model, suite: str, seed: int, rows: List[dict]) -> Tuple[dict, Dict[str, float]]:
    """Machine report (no timing) and the per-check timings for the human renderings."""
    checks, timings = [], {}
    for row in rows:
        spec = CHECKS[row["check_id"]]
        timings[spec.id] = row["elapsed"]
        if row["status"] == "done":
            details = dict(row["result"])
            status = details.pop("status")
        else:
            status = "fail"
            details = {"error": (row["error"] or "check did not finish").strip().splitlines()[-1]}
        checks.append({"id": spec.id, "anchor": spec.anchor, "status": status, "details": details})
    summary = {status: sum(1 for c in checks if c["status"] == status) for status in STATUSES}
    report = {
        "format_version": FORMAT_VERSION,
        "model": model.name,
        "suite": suite,
        "seed": seed,
        "mode": model.mode,
        "tolerance": model.tolerance,
        "space": {"states": len(model.space.states), "horizon": model.space.horizon, "d": model.d, "m": model.m},
        "checks": checks,
        "summary": summary,
        "scope": consistency.SCOPE_NOTE,
    }
    return report, timings


def run_suite(model: Model, suite: str, seed: int, threads: Optional[int] = None) -> Tuple[dict, Dict[str, float]]:
    specs = select(suite)
    fd, db_path = tempfile.mkstemp(prefix="risktree_", suffix=".db")
    os.close(fd)
    try:
        check_queue.init_db(db_path)
        for position, spec in enumerate(specs):
            check_queue.add_check(position, spec.id, db_path)
        logger.info(f"📥 Queued {len(specs)} checks of suite '{suite}' for model '{model.name}'")
        worker.run_workers(db_path, lambda check_id: run_check(model, check_id, seed), threads)
        rows = check_queue.collect_results(db_path)
    finally:
        check_queue.remove_db(db_path)
    return build_report(model, suite, seed, rows)


def exit_code(report: dict) -> int:
    return 1 if report["summary"]["fail"] else 0


def report_json(report: dict) -> str:
    return check_queue.dumps(report, sort_keys=True, indent=2) + "\n"


# ===========================
# 🖨️ Text Rendering
# ===========================

ICONS = {"pass": "✅", "fail": "❌", "sampled": "🎲", "skipped": "⏭️"}


def render_text(report: dict, timings: Optional[Dict[str, float]] = None) -> str:
    timings = timings or {}
    lines = [
        f"Model {report['model']}  suite={report['suite']}  seed={report['seed']}  mode={report['mode']}",
        f"  states={report['space']['states']}  T={report['space']['horizon']}  d={report['space']['d']}  "
        f"m={report['space']['m']}  tolerance={report['tolerance']}",
        "",
    ]
    for check in report["checks"]:
        took = timings.get(check["id"])
        clock = f"  ({took:.2f}s)" if took is not None else ""
        lines.append(f"{ICONS[check['status']]} {check['id']:<36} {check['status']}{clock}")
        details = check["details"]
        if "reason" in details:
            lines.append(f"     reason: {details['reason']}")
        if "error" in details:
            lines.append(f"     error: {details['error']}")
        if check["status"] == "fail" and "witness" in details:
            lines.append(f"     witness: {check_queue.dumps(details['witness'], sort_keys=True)[:400]}")
    summary = report["summary"]
    lines += ["", "Summary: " + ", ".join(f"{summary[s]} {s}" for s in STATUSES),
              f"Scope: {report['scope']}"]
    if timings:
        lines.append(f"Total check time: {sum(timings.values()):.2f}s")
    return "\n".join(lines) + "\n"
