import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import lp_backend
import polyhedra
from acceptance import AcceptanceSet, CellLayout, ProcessAcceptanceSet
from polyhedra import ConditionalPolyhedron
from space import (ARITH_TOL, ScenarioSpace, as_floats, close, cond_exp, draw, expectation_weights,
                   is_measurable, ones, random_density, to_number, w_map, zeros)

# ===========================
# 🔧 Configuration
# ===========================
REQUIRED_AXIOMS = ("acceptance_bijection", "cash_invariance", "monotonicity", "finite_at_zero")
OPTIONAL_AXIOMS = ("normalized", "convex", "coherent")

logger = logging.getLogger("RiskProc")


class DualError(ValueError):
    """A dual variable outside its admissible set, or a query undefined for the acceptance set."""


@dataclass(frozen=True, eq=False)
class ProcessRiskMeasure:
    acceptance: ProcessAcceptanceSet
    m: int

    @property
    def time(self) -> int:
        return self.acceptance.time

    def labels(self) -> tuple:
        return self.acceptance.labels()

    def __call__(self, X) -> ConditionalPolyhedron:
        return rho_eval(self.acceptance, X, self.m)


def rho_eval(A: AcceptanceSet, X, m: int) -> ConditionalPolyhedron:
    """{capital in M_t : X + capital 1_(T_t) in A}."""
    value = A.evaluate(X, m)
    if all(piece.empty for piece in value.pieces):
        logger.debug(f"Risk of position is empty on every atom at time {A.time}")
    return value


# ===========================
# 🎯 Dual Variables
# ===========================

@dataclass(frozen=True, eq=False)
class ProcessDualVariable:
    """(Q, w) at time t: Q[s, i] is dQ_(s,i)/dP and w[s] the F_t-measurable weight of time s (rows s >= t used)."""
    t: int
    Q: np.ndarray
    w: np.ndarray

    def as_dict(self) -> dict:
        t = self.t
        return {"t": t, "Q": as_floats(self.Q[t:]), "w": as_floats(self.w[t:])}


def validate_process_dual(space: ScenarioSpace, Qw: ProcessDualVariable, m: int, tol: float = ARITH_TOL):
    """Membership in W_t; raises DualError naming the first broken condition."""
    t, exact = Qw.t, space.exact
    T, d = space.horizon, Qw.w.shape[2]
    tiny = 0 if exact else tol
    if Qw.Q.shape != (T + 1, d, space.n_states) or Qw.w.shape != (T + 1, space.n_states, d):
        raise DualError(f"dual variable has shapes Q{Qw.Q.shape}, w{Qw.w.shape}")
    eligible = False
    for s in range(t, T + 1):
        for i in range(d):
            density = Qw.Q[s, i]
            if np.any(density < -tiny):
                raise DualError(f"Q[{s},{i}] has a negative density")
            if not close(cond_exp(space, density, t), ones(space.n_states, exact), exact, tol):
                raise DualError(f"Q[{s},{i}] does not agree with P on F_{t}")
        if not is_measurable(space, Qw.w[s], t):
            raise DualError(f"w[{s}] is not F_{t}-measurable")
        if np.any(Qw.w[s, :, :m] < -tiny):
            raise DualError(f"w[{s}] has a negative eligible component")
        if np.any(np.abs(Qw.w[s, :, :m].astype(float)) > tol):
            eligible = True
        if np.any(w_map(space, Qw.Q[s], Qw.w[s], t, s) < -tiny):
            raise DualError(f"w_t^{s}(Q_{s}, w_{s}) is negative on some state")
    if not eligible:
        raise DualError("every w_s vanishes on the eligible assets")


def dual_normal(space: ScenarioSpace, Qw: ProcessDualVariable, label, m: int) -> list:
    """sum_s w_s[:m] on the atom."""
    total = zeros(m, space.exact)
    for s in range(Qw.t, space.horizon + 1):
        total = total + Qw.w[s, space.rep(label.time, label.index)][:m]
    return list(total)


def pairing_functional(layout: CellLayout, Qw: ProcessDualVariable, label) -> np.ndarray:
    """c with c.flatten(Y) = sum_s w_s . E_t^(Q_s)[Y_s] on the atom."""
    space = layout.space
    c = zeros(layout.n_coords, space.exact)
    t, a = Qw.t, label.index
    for s in range(t, space.horizon + 1):
        weight = Qw.w[s, space.rep(label.time, label.index)]
        for i in range(layout.d):
            if weight[i] == 0:
                continue
            ew = expectation_weights(space, Qw.Q[s, i], t, a)
            for b in space.descendants(t, a, s):
                c[layout.coord(s, b, i)] += weight[i] * ew[space.members(s, b)].sum()
    return c


def penalty_piece(A: AcceptanceSet, c, normal, m: int) -> polyhedra.Polyhedron:
    """{u : normal.u >= sup over A of -c.z}; empty when the supremum is infinite."""
    res = A.infimum(c)
    if res.status == lp_backend.UNBOUNDED:
        return polyhedra.empty_set(m, A.exact)
    if res.status == lp_backend.INFEASIBLE:
        return polyhedra.whole(m, A.exact)
    return polyhedra.halfspaces([normal], [-res.value], A.exact, m)


def penalty_process(A: ProcessAcceptanceSet, Qw: ProcessDualVariable, m: int,
                    validate: bool = True) -> ConditionalPolyhedron:
    """Minimal conditional penalty alpha_t(Q, w), one LP per atom."""
    space = A.space
    if validate:
        validate_process_dual(space, Qw, m)
    labels = A.labels()
    pieces = [penalty_piece(A, pairing_functional(A.layout, Qw, label), dual_normal(space, Qw, label, m), m)
              for label in labels]
    return polyhedra.assemble(labels, pieces)


def dual_term_process(A: ProcessAcceptanceSet, X, Qw: ProcessDualVariable, m: int,
                      penalty: Optional[ConditionalPolyhedron] = None) -> ConditionalPolyhedron:
    space, layout = A.space, A.layout
    penalty = penalty_process(A, Qw, m) if penalty is None else penalty
    x = layout.flatten(X)
    labels = A.labels()
    pieces = []
    for label in labels:
        level = -pairing_functional(layout, Qw, label).dot(x)
        pieces.append(polyhedra.halfspaces([dual_normal(space, Qw, label, m)], [level], A.exact, m))
    return polyhedra.minkowski_diff(polyhedra.assemble(labels, pieces), penalty)


def dual_eval_process(A: ProcessAcceptanceSet, X, duals: Sequence[ProcessDualVariable],
                      m: int) -> ConditionalPolyhedron:
    """Intersection of the dual terms; an outer bound of rho_t(X) for any finite family."""
    result = polyhedra.conditional_whole(A.labels(), m, A.exact)
    for Qw in duals:
        result = polyhedra.intersect(result, dual_term_process(A, X, Qw, m))
    return result


def is_max_dual_process(A: ProcessAcceptanceSet, Qw: ProcessDualVariable) -> Tuple[bool, Optional[dict]]:
    """sum_s w_s . E_t^(Q_s)[Z_s] >= 0 for every Z in A, atom by atom."""
    if not A.is_cone:
        raise DualError("the maximal dual set is defined for conditionally coherent acceptance sets")
    tol = polyhedra.tolerance(A.exact)
    for label in A.labels():
        res = A.infimum(pairing_functional(A.layout, Qw, label))
        if res.status == lp_backend.UNBOUNDED:
            return False, {"atom": f"{label.kind}:{label.time}:{label.index}", "value": "-inf"}
        if res.optimal and res.value < -tol:
            return False, {"atom": f"{label.kind}:{label.time}:{label.index}", "value": float(res.value),
                           "position": as_floats(A.layout.unflatten(res.x))}
    return True, None


def dirac_duals_process(space: ScenarioSpace, t: int, d: int, m: int) -> List[ProcessDualVariable]:
    """Point-mass duals: one per (time s, member rank inside each F_t-atom, eligible asset)."""
    T, N, exact = space.horizon, space.n_states, space.exact
    widest = max(len(atom) for atom in space.partitions[t])
    duals = []
    for s in range(t, T + 1):
        for k in range(widest):
            density = zeros(N, exact)
            for a, atom in enumerate(space.partitions[t]):
                state = atom[min(k, len(atom) - 1)]
                density[state] = space.atom_prob(t, a) / space.prob[state]
            for i in range(m):
                Q = ones((T + 1, d, N), exact)
                Q[s, :, :] = density
                w = zeros((T + 1, N, d), exact)
                w[s, :, i] = to_number(1, exact)
                duals.append(ProcessDualVariable(t, Q, w))
    return duals


def sample_process_duals(space: ScenarioSpace, rng: np.random.Generator, t: int, d: int, m: int,
                         count: int, null_prob: float = 0.3) -> List[ProcessDualVariable]:
    T, N, exact = space.horizon, space.n_states, space.exact
    duals = []
    for _ in range(count):
        Q = ones((T + 1, d, N), exact)
        w = zeros((T + 1, N, d), exact)
        for s in range(t, T + 1):
            for i in range(d):
                Q[s, i] = random_density(space, rng, t=t, null_prob=null_prob)
            if rng.random() < null_prob:
                continue
            for a in range(len(space.partitions[t])):
                w[s, space.members(t, a)] = draw(rng, 0.0, 1.0, d, exact)
        if not np.any(w[:, :, :m].astype(float) > 0):
            w[t, :, 0] = to_number(1, exact)
        duals.append(ProcessDualVariable(t, Q, w))
    return duals


# ===========================
# 🧪 Axiom Sampler
# ===========================

def _label_key(label) -> str:
    return f"{label.kind}:{label.time}:{label.index}"


def _scalar_field(layout: CellLayout, labels, values: Dict) -> np.ndarray:
    """A field equal to values[label] on every cell of the atom, in all d assets."""
    space = layout.space
    out = zeros((space.horizon + 1, space.n_states, 1), space.exact)
    for label in labels:
        for (r, b) in layout.label_cells(label):
            out[r, space.members(r, b)] = values[label]
    return out


def _result(status: str, samples: int, witness: Optional[dict] = None) -> dict:
    out = {"status": status, "samples": samples}
    if witness is not None:
        out["witness"] = witness
    return out


def check_axioms(A: AcceptanceSet, m: int, rng: np.random.Generator, samples: int = 20) -> Dict[str, dict]:
    """Sampled verdicts for the defining axioms (required) and the structural properties (optional)."""
    layout, exact = A.layout, A.exact
    labels = A.labels()
    space = A.space
    evaluate = lambda X: A.evaluate(X, m)
    zero = zeros((space.horizon + 1, space.n_states, A.d), exact)
    report = {}

    def run(name, trial):
        for k in range(samples):
            witness = trial()
            if witness is not None:
                witness["sample"] = k
                report[name] = _result("fail", k + 1, witness)
                logger.info(f"⚠️ Axiom {name} fails for {A.kind} set at time {A.time}")
                return
        report[name] = _result("pass", samples)

    def bijection():
        X = A.random_position(rng, -0.5, 3.0)
        inside = A.contains(X)
        zero_risk = polyhedra.contains_point(evaluate(X), {label: [0] * m for label in labels})
        if inside != zero_risk:
            return {"X": as_floats(X), "in_acceptance": inside, "zero_in_risk": zero_risk}

    def cash():
        X = A.random_position(rng)
        shift = {label: draw(rng, -2.0, 2.0, m, exact) for label in labels}
        lhs = evaluate(X + layout.capital_field(labels, shift, m))
        rhs = polyhedra.translate(evaluate(X), {label: [-v for v in shift[label]] for label in labels})
        if not polyhedra.equals(lhs, rhs):
            return {"X": as_floats(X), "capital": {_label_key(l): as_floats(v) for l, v in shift.items()}}

    def monotone():
        X = A.random_position(rng)
        Y = X + A.random_position(rng, 0.0, 2.0)
        if not polyhedra.subset_of(evaluate(X), evaluate(Y)):
            return {"X": as_floats(X), "Y": as_floats(Y)}

    run("acceptance_bijection", bijection)
    run("cash_invariance", cash)
    run("monotonicity", monotone)

    at_zero = evaluate(zero)
    bad = []
    for label in labels:
        piece = polyhedra.project_label(at_zero, label)
        if polyhedra.is_empty(piece) or polyhedra.is_whole(polyhedra.canonicalize(piece)):
            bad.append(_label_key(label))
    report["finite_at_zero"] = _result("fail" if bad else "pass", 1, {"atoms": bad} if bad else None)

    if at_zero.coupling is not None:
        for name in OPTIONAL_AXIOMS:
            report[name] = _result("skipped", 0, {"reason": "risk values couple atoms"})
        return report

    def normalized():
        X = A.random_position(rng)
        value = evaluate(X)
        if value.coupling is not None:
            return None
        if not polyhedra.equals(polyhedra.minkowski_sum(value, at_zero), value):
            return {"X": as_floats(X)}

    def convex():
        X, Y = A.random_position(rng), A.random_position(rng)
        lam = {label: draw(rng, 0.0, 1.0, 1, exact)[0] for label in labels}
        field = _scalar_field(layout, labels, lam)
        mixed = evaluate(field * X + (1 - field) * Y)
        vx, vy = evaluate(X), evaluate(Y)
        if vx.coupling is not None or vy.coupling is not None:
            return None
        combo = polyhedra.minkowski_sum(polyhedra.scalar_field_multiply(lam, vx),
                                        polyhedra.scalar_field_multiply({l: 1 - v for l, v in lam.items()}, vy))
        if not polyhedra.subset_of(combo, mixed):
            return {"X": as_floats(X), "Y": as_floats(Y), "lambda": {_label_key(l): float(v) for l, v in lam.items()}}

    def coherent():
        X = A.random_position(rng)
        lam = {label: draw(rng, 0.2, 3.0, 1, exact)[0] for label in labels}
        value = evaluate(X)
        if value.coupling is not None:
            return None
        scaled = evaluate(_scalar_field(layout, labels, lam) * X)
        if not polyhedra.equals(scaled, polyhedra.scalar_field_multiply(lam, value)):
            return {"X": as_floats(X), "lambda": {_label_key(l): float(v) for l, v in lam.items()}}

    run("normalized", normalized)
    run("convex", convex)
    run("coherent", coherent)
    return report


def axioms_hold(report: Dict[str, dict]) -> bool:
    return all(report[name]["status"] == "pass" for name in REQUIRED_AXIOMS if name in report)


def properties(report: Dict[str, dict]) -> Dict[str, Optional[bool]]:
    """Verdicts of the optional properties (None when skipped)."""
    out = {}
    for name in OPTIONAL_AXIOMS:
        status = report.get(name, {}).get("status")
        out[name] = None if status == "skipped" else status == "pass"
    return out


def check_axioms_process(rho: ProcessRiskMeasure, rng: np.random.Generator, samples: int = 20) -> Dict[str, dict]:
    return check_axioms(rho.acceptance, rho.m, rng, samples)
