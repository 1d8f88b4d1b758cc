import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import lp_backend
import polyhedra
from acceptance import (CellLayout, RestrictedAcceptanceSet, VectorAcceptanceSet, row_field,
                        tail_field, value_on)
from polyhedra import ConditionalPolyhedron
from riskproc import DualError, check_axioms, penalty_piece
from space import (ARITH_TOL, OptionalSpace, ScenarioSpace, as_floats, bar_expectation_weights,
                   bar_w_map, compose, draw, is_measurable, is_Mt_preserving, measure_summary,
                   random_optional_measure, reference_measure, to_number, zeros)

logger = logging.getLogger("RiskVec")


@dataclass(frozen=True, eq=False)
class VectorRiskMeasure:
    acceptance: VectorAcceptanceSet
    m: int

    @property
    def time(self) -> int:
        return self.acceptance.time

    def labels(self) -> tuple:
        return self.acceptance.labels()

    def __call__(self, X) -> ConditionalPolyhedron:
        return rbar_eval(self.acceptance, X, self.m)


@dataclass(frozen=True, eq=False)
class RestrictedRiskMeasure:
    """R_s on F_s-measurable vectors; `acceptance.horizon` is the t it was restricted from."""
    acceptance: RestrictedAcceptanceSet
    m: int

    @property
    def time(self) -> int:
        return self.acceptance.time

    def labels(self) -> tuple:
        return self.acceptance.labels()

    def __call__(self, Z) -> ConditionalPolyhedron:
        return restricted_eval(self.acceptance, Z, self.m)


def rbar_eval(A: VectorAcceptanceSet, X, m: int) -> ConditionalPolyhedron:
    """{capital in M-bar_t : X + capital in A-bar_t}, one block per F-bar_t-atom."""
    return A.evaluate(X, m)


def restricted_eval(A: RestrictedAcceptanceSet, Z, m: int) -> ConditionalPolyhedron:
    """R_s(Z) for an F_s-measurable (N, d) vector Z."""
    return A.evaluate(row_field(A.space, Z, A.time), m)


# ===========================
# 🎯 Dual Variables
# ===========================

@dataclass(frozen=True, eq=False)
class VectorDualVariable:
    """(Q-bar, w-bar) at time t: one optional measure per asset, w-bar an F-bar_t-measurable (T+1, N, d) field."""
    t: int
    Qbar: tuple
    wbar: np.ndarray

    def as_dict(self) -> dict:
        return {"t": self.t, "Qbar": [measure_summary(q) for q in self.Qbar], "wbar": as_floats(self.wbar)}


def validate_vector_dual(opt: OptionalSpace, dual: VectorDualVariable, m: int, tol: float = ARITH_TOL):
    space = opt.base
    t, exact = dual.t, space.exact
    tiny = 0 if exact else tol
    d = dual.wbar.shape[2]
    if len(dual.Qbar) != d:
        raise DualError(f"expected {d} optional measures, got {len(dual.Qbar)}")
    for i, Qbar in enumerate(dual.Qbar):
        if not is_Mt_preserving(opt, Qbar, t, tol):
            raise DualError(f"Q-bar[{i}] does not agree with P-bar on F-bar_{t}")
    for r in range(t):
        if not is_measurable(space, dual.wbar[r], r):
            raise DualError(f"w-bar row {r} is not F_{r}-measurable")
    if not is_measurable(space, dual.wbar[t], t):
        raise DualError(f"w-bar row {t} is not F_{t}-measurable")
    for r in range(t + 1, space.horizon + 1):
        if np.any(dual.wbar[r] != dual.wbar[t]):
            raise DualError(f"w-bar row {r} differs from row {t} on the frozen block")
    if np.any(dual.wbar[:, :, :m] < -tiny):
        raise DualError("w-bar has a negative eligible component")
    if not np.any(np.abs(dual.wbar[:, :, :m].astype(float)) > tol):
        raise DualError("w-bar vanishes on the eligible assets")
    if np.any(bar_w_map(opt, dual.Qbar, dual.wbar, t, space.horizon) < -tiny):
        raise DualError(f"w-bar_{t}^T(Q-bar, w-bar) is negative on some cell")


def vector_pairing(layout: CellLayout, dual: VectorDualVariable, label) -> np.ndarray:
    """c with c.flatten(Y) = w-bar . E-bar_t^Q-bar[Y] on the atom."""
    space = layout.space
    opt = OptionalSpace(space)
    c = zeros(layout.n_coords, space.exact)
    weight = value_on(space, dual.wbar, label)
    if label.kind == "past":
        for i in range(layout.d):
            c[layout.coord(label.time, label.index, i)] = weight[i]
        return c
    for i in range(layout.d):
        if weight[i] == 0:
            continue
        ew = bar_expectation_weights(opt, dual.Qbar[i], dual.t, label)
        for s in range(dual.t, space.horizon + 1):
            for b in space.descendants(label.time, label.index, s):
                c[layout.coord(s, b, i)] += weight[i] * ew[s, space.members(s, b)].sum()
    return c


def _normal(space: ScenarioSpace, field, label, m: int) -> list:
    return list(value_on(space, field, label)[:m])


def penalty_vector(A: VectorAcceptanceSet, dual: VectorDualVariable, m: int,
                   validate: bool = True) -> ConditionalPolyhedron:
    """Minimal conditional penalty alpha-bar_t(Q-bar, w-bar), one LP per F-bar_t-atom."""
    space = A.space
    if validate:
        validate_vector_dual(OptionalSpace(space), dual, m)
    labels = A.labels()
    pieces = [penalty_piece(A, vector_pairing(A.layout, dual, label), _normal(space, dual.wbar, label, m), m)
              for label in labels]
    return polyhedra.assemble(labels, pieces)


def _restricted_pairing(layout: CellLayout, w, label) -> np.ndarray:
    c = zeros(layout.n_coords, layout.exact)
    weight = w[layout.space.rep(label.time, label.index)]
    for i in range(layout.d):
        c[layout.coord(label.time, label.index, i)] = weight[i]
    return c


def penalty_restricted(A: RestrictedAcceptanceSet, w, m: int) -> ConditionalPolyhedron:
    """alpha_(R_s)(w) for an F_s-measurable (N, d) weight; no measure enters."""
    space = A.space
    labels = A.labels()
    field = row_field(space, w, A.time)
    pieces = [penalty_piece(A, _restricted_pairing(A.layout, w, label), _normal(space, field, label, m), m)
              for label in labels]
    return polyhedra.assemble(labels, pieces)


def dual_term_vector(A: VectorAcceptanceSet, X, dual: VectorDualVariable, m: int,
                     penalty: Optional[ConditionalPolyhedron] = None) -> ConditionalPolyhedron:
    space, layout = A.space, A.layout
    penalty = penalty_vector(A, dual, m) if penalty is None else penalty
    x = layout.flatten(X)
    labels = A.labels()
    pieces = []
    for label in labels:
        level = -vector_pairing(layout, dual, label).dot(x)
        pieces.append(polyhedra.halfspaces([_normal(space, dual.wbar, label, m)], [level], A.exact, m))
    return polyhedra.minkowski_diff(polyhedra.assemble(labels, pieces), penalty)


def dual_eval_vector(A: VectorAcceptanceSet, X, duals: Sequence[VectorDualVariable], m: int) -> ConditionalPolyhedron:
    result = polyhedra.conditional_whole(A.labels(), m, A.exact)
    for dual in duals:
        result = polyhedra.intersect(result, dual_term_vector(A, X, dual, m))
    return result


def is_max_dual_vector(A: VectorAcceptanceSet, dual: VectorDualVariable) -> Tuple[bool, Optional[dict]]:
    """E-bar[w-bar_t^T(Q-bar, w-bar) . Z] >= 0 over the whole cone."""
    if not A.is_cone:
        raise DualError("the maximal dual set is defined for conditionally coherent acceptance sets")
    space, layout = A.space, A.layout
    opt = OptionalSpace(space)
    v = bar_w_map(opt, dual.Qbar, dual.wbar, dual.t, space.horizon)
    mass = opt.cell_mass()
    c = zeros(layout.n_coords, space.exact)
    for (r, b) in layout.cells:
        idx = space.members(r, b)
        for i in range(layout.d):
            c[layout.coord(r, b, i)] = (mass[r, idx] * v[r, idx, i]).sum()
    res = A.infimum(c)
    tol = polyhedra.tolerance(A.exact)
    if res.status == lp_backend.UNBOUNDED:
        return False, {"value": "-inf"}
    if res.optimal and res.value < -tol:
        return False, {"value": float(res.value), "position": as_floats(layout.unflatten(res.x))}
    return True, None


def is_max_dual_restricted(A: RestrictedAcceptanceSet, w) -> Tuple[bool, Optional[dict]]:
    if not A.is_cone:
        raise DualError("the maximal dual set is defined for conditionally coherent acceptance sets")
    tol = polyhedra.tolerance(A.exact)
    for label in A.labels():
        res = A.infimum(_restricted_pairing(A.layout, w, label))
        if res.status == lp_backend.UNBOUNDED:
            return False, {"atom": f"{label.kind}:{label.time}:{label.index}", "value": "-inf"}
        if res.optimal and res.value < -tol:
            return False, {"atom": f"{label.kind}:{label.time}:{label.index}", "value": float(res.value)}
    return True, None


def _stopped_at(space: ScenarioSpace, t: int, s: int) -> np.ndarray:
    """psi equal to mu before t and putting all remaining weight on time s."""
    psi = zeros((space.horizon + 1, space.n_states), space.exact)
    psi[:t] = space.mu[:t]
    psi[s] = 1 - space.mu_before(t)
    return psi


def dirac_duals_vector(space: ScenarioSpace, t: int, d: int, m: int) -> List[VectorDualVariable]:
    """Point-mass duals: unit weight on each realized cell, and Q-bar stopped at (state, s) on the frozen block."""
    exact = space.exact
    T, N = space.horizon, space.n_states
    duals = []
    reference = reference_measure(space)
    for r in range(t):
        for a in range(len(space.partitions[r])):
            for i in range(m):
                wbar = zeros((T + 1, N, d), exact)
                wbar[r, space.members(r, a), i] = to_number(1, exact)
                duals.append(VectorDualVariable(t, (reference,) * d, wbar))
    widest = max(len(atom) for atom in space.partitions[t])
    for s in range(t, T + 1):
        psi = _stopped_at(space, t, s)
        for k in range(widest):
            q = zeros(N, exact)
            for a, atom in enumerate(space.partitions[t]):
                state = atom[min(k, len(atom) - 1)]
                q[state] = space.atom_prob(t, a) / space.prob[state]
            measure = compose(space, q, psi)
            for i in range(m):
                wbar = zeros((T + 1, N, d), exact)
                wbar[t:, :, i] = to_number(1, exact)
                duals.append(VectorDualVariable(t, (measure,) * d, wbar))
    return duals


def sample_vector_duals(space: ScenarioSpace, rng: np.random.Generator, t: int, d: int, m: int,
                        count: int, null_prob: float = 0.3, exhaust_prob: float = 0.2) -> List[VectorDualVariable]:
    T, N, exact = space.horizon, space.n_states, space.exact
    duals = []
    for _ in range(count):
        Qbar = tuple(random_optional_measure(space, rng, t=t, null_prob=null_prob, exhaust_prob=exhaust_prob)
                     for _ in range(d))
        wbar = zeros((T + 1, N, d), exact)
        for r in range(t + 1):
            if r < t and rng.random() < null_prob:
                continue
            for a in range(len(space.partitions[r])):
                wbar[r, space.members(r, a)] = draw(rng, 0.0, 1.0, d, exact)
        if not np.any(wbar[t, :, :m].astype(float) > 0):
            wbar[t, :, 0] = to_number(1, exact)
        wbar[t + 1:] = wbar[t]
        duals.append(VectorDualVariable(t, Qbar, wbar))
    return duals


# ===========================
# 🧪 Axioms
# ===========================

def time_decomposition(A: VectorAcceptanceSet, X, m: int) -> ConditionalPolyhedron:
    """R-bar_t(X 1_s) on the cells of time s for s < t, next to R-bar_t(X 1_(T_t)) on the frozen block."""
    space, t = A.space, A.time
    parts = []
    for s in range(t):
        value = A.evaluate(row_field(space, X[s], s), m)
        parts.append(polyhedra.restrict_labels(value, space.past_labels(s)))
    value = A.evaluate(tail_field(X, t), m)
    parts.append(polyhedra.restrict_labels(value, space.future_labels(t)))
    return polyhedra.product(parts)


def check_time_decomposable(A: VectorAcceptanceSet, m: int, rng: np.random.Generator, samples: int = 20) -> dict:
    for k in range(samples):
        X = A.random_position(rng)
        if not polyhedra.equals(A.evaluate(X, m), time_decomposition(A, X, m)):
            logger.info(f"⚠️ Vector risk measure at time {A.time} is not time decomposable")
            return {"status": "fail", "samples": k + 1, "witness": {"X": as_floats(X), "sample": k}}
    return {"status": "pass", "samples": samples}


def check_axioms_vector(rbar: VectorRiskMeasure, rng: np.random.Generator, samples: int = 20) -> Dict[str, dict]:
    report = check_axioms(rbar.acceptance, rbar.m, rng, samples)
    report["time_decomposable"] = check_time_decomposable(rbar.acceptance, rbar.m, rng, samples)
    return report


def check_axioms_restricted(R: RestrictedRiskMeasure, rng: np.random.Generator, samples: int = 20) -> Dict[str, dict]:
    return check_axioms(R.acceptance, R.m, rng, samples)


