import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import lp_backend
import polyhedra
from acceptance import (CellLayout, ProcessAcceptanceSet, RestrictedAcceptanceSet,
                        VectorAcceptanceSet, empty_rows, tail_field)
from polyhedra import ConditionalPolyhedron
from riskproc import (ProcessDualVariable, ProcessRiskMeasure, is_max_dual_process, penalty_process)
from riskvec import (RestrictedRiskMeasure, VectorDualVariable, VectorRiskMeasure, is_max_dual_restricted,
                     is_max_dual_vector, penalty_restricted, penalty_vector)
from space import (ARITH_TOL, OptionalSpace, ScenarioSpace, as_floats, close, cond_exp, cond_expectation, decompose,
                   ones, positive, ratio, reference_measure, w_map, xi, zeros)

logger = logging.getLogger("Bridge")


class BridgeError(ValueError):
    """A lift, projection or dual map requested outside its domain."""


# ===========================
# 🔗 Augmented Measures
# ===========================

@dataclass(frozen=True, eq=False)
class AugmentedProcessRiskMeasure:
    """rho_t together with the restricted measures R_s (s < t) acting on the realized past."""
    restricted: tuple
    process: ProcessRiskMeasure

    @property
    def time(self) -> int:
        return self.process.time

    @property
    def m(self) -> int:
        return self.process.m

    @property
    def layout(self) -> CellLayout:
        return self.process.acceptance.layout

    def __post_init__(self):
        times = [R.time for R in self.restricted]
        if times != list(range(self.process.time)):
            raise BridgeError(f"restricted measures at times {times}, expected 0..{self.process.time - 1}")


def lift_acceptance(restricted: Sequence[RestrictedAcceptanceSet],
                    process: ProcessAcceptanceSet) -> VectorAcceptanceSet:
    """sum_s A_(R_s) 1_s + A_t 1_(T_t) as one optional-space acceptance set."""
    parts = tuple(restricted) + (process,)
    G = np.vstack([part.G for part in parts])
    h = np.concatenate([part.h for part in parts])
    return VectorAcceptanceSet(process.layout, G, h, process.time, "lifted", parts=parts)


def lift(aug: AugmentedProcessRiskMeasure) -> VectorRiskMeasure:
    acceptance = lift_acceptance([R.acceptance for R in aug.restricted], aug.process.acceptance)
    return VectorRiskMeasure(acceptance, aug.m)


def _slice_rows(A: VectorAcceptanceSet, rows: Sequence[int], free: Sequence, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Constraints on the coordinates of `rows` once capital on the `free` atoms is projected out."""
    layout, exact = A.layout, A.exact
    block = layout.row_coords(rows)
    n = layout.n_coords
    if A.G.shape[0] == 0:
        return zeros((0, n), exact), zeros(0, exact)
    tol = polyhedra.tolerance(exact)
    zero = 0 if exact else 1e-12
    Gx = A.G[:, block]
    Gm = A.G.dot(layout.shift_matrix(free, m)) if free else zeros((A.G.shape[0], 0), exact)
    has_x = [any(abs(v) > zero for v in row) for row in Gx]
    has_m = [any(abs(v) > zero for v in row) for row in Gm]

    def embed(sub_rows):
        full = zeros((len(sub_rows), n), exact)
        for k, row in enumerate(sub_rows):
            full[k, block] = row
        return full

    for k in range(A.G.shape[0]):
        if not has_x[k] and not has_m[k] and A.h[k] > tol:
            return empty_rows(layout)
    if not any(x and u for x, u in zip(has_x, has_m)):
        free_rows = [k for k in range(A.G.shape[0]) if has_m[k]]
        if free_rows:
            res = lp_backend.minimize(zeros(Gm.shape[1], exact), Gm[free_rows], A.h[free_rows], exact=exact)
            if res.status == lp_backend.INFEASIBLE:
                return empty_rows(layout)
        local = [k for k in range(A.G.shape[0]) if has_x[k]]
        return embed(Gx[local]), A.h[local]
    joint = polyhedra.halfspaces(np.hstack([Gx, Gm]), A.h, exact, len(block) + Gm.shape[1])
    image = polyhedra.project(joint, range(len(block)))
    if image.empty:
        return empty_rows(layout)
    logger.debug(f"Projected {A.G.shape[0]} rows onto times {list(rows)}: {image.n_facets} facets")
    return embed(image.A), image.b


def project_acceptance(A: VectorAcceptanceSet, m: int,
                       use_cache: bool = True) -> Tuple[List[RestrictedAcceptanceSet], ProcessAcceptanceSet]:
    """A_(R_s) = {Z : Z 1_s in A-bar_t} and A_t = {X : X 1_(T_t) in A-bar_t}, up to capital on the other atoms."""
    if use_cache and A.parts is not None:
        return list(A.parts[:-1]), A.parts[-1]
    space, layout, t = A.space, A.layout, A.time
    labels = A.labels()
    restricted = []
    for s in range(t):
        free = [label for label in labels if not (label.kind == "past" and label.time == s)]
        G, h = _slice_rows(A, [s], free, m)
        restricted.append(RestrictedAcceptanceSet(layout, G, h, s, "projected", horizon=t))
    past = [label for label in labels if label.kind == "past"]
    G, h = _slice_rows(A, range(t, space.horizon + 1), past, m)
    return restricted, ProcessAcceptanceSet(layout, G, h, t, "projected")


def project(rbar: VectorRiskMeasure, use_cache: bool = True) -> AugmentedProcessRiskMeasure:
    restricted, process = project_acceptance(rbar.acceptance, rbar.m, use_cache)
    return AugmentedProcessRiskMeasure(tuple(RestrictedRiskMeasure(A, rbar.m) for A in restricted),
                                       ProcessRiskMeasure(process, rbar.m))


# ===========================
# 🔁 Dual Maps
# ===========================

def maps_to_process_dual(dual: VectorDualVariable, m: int) -> bool:
    """W_t lands in the process duals only when w-bar_t is not orthogonal to the eligible assets."""
    frozen = dual.wbar[dual.t, :, :m].astype(float)
    return bool(np.any(np.abs(frozen) > ARITH_TOL))


def map_dual_to_process(opt: OptionalSpace, dual: VectorDualVariable) -> ProcessDualVariable:
    """W_t: per asset, spread w-bar_t over the times s >= t by the Q-mass psi puts there."""
    space = opt.base
    t, exact = dual.t, space.exact
    T, N = space.horizon, space.n_states
    d = dual.wbar.shape[2]
    free = 1 - space.mu_before(t)
    Q = ones((T + 1, d, N), exact)
    w = zeros((T + 1, N, d), exact)
    for i, measure in enumerate(dual.Qbar):
        for s in range(t, T + 1):
            psi_s = measure.psi[s]
            mass = cond_expectation(space, psi_s, measure.q, t)
            w[s, :, i] = mass / free * dual.wbar[t, :, i]
            fallback = space.mu[s] / cond_exp(space, space.mu[s], t)
            hit = positive(mass, exact)
            density = np.array(fallback, copy=True)
            density[hit] = (psi_s * xi(space, measure.q, t, s))[hit] / mass[hit]
            Q[s, i] = density
    return ProcessDualVariable(t, Q, w)


def map_dual_to_vector(opt: OptionalSpace, Qw: ProcessDualVariable) -> VectorDualVariable:
    """W-bar_t: w-bar_t = sum of the positive parts of w_s, Q-bar_i built from the shares w_(s,i) / w-bar_(t,i)."""
    space = opt.base
    t, exact = Qw.t, space.exact
    T, N = space.horizon, space.n_states
    d = Qw.w.shape[2]
    kept = np.where(Qw.w > 0, Qw.w, zeros(Qw.w.shape, exact))
    kept[:t] = 0
    total = kept[t:].sum(axis=0)
    wbar = zeros((T + 1, N, d), exact)
    wbar[t:] = total
    free = 1 - space.mu_before(t)
    measures = []
    for i in range(d):
        weights = zeros((T + 1, N), exact)
        for s in range(T + 1):
            if s < t:
                weights[s] = space.prob * space.mu[s]
                continue
            share = ratio(kept[s, :, i], total[:, i], 0, exact)
            scaled = space.prob * free * share * xi(space, Qw.Q[s, i], t, s)
            idle = ~positive(total[:, i], exact)
            scaled[idle] = (space.prob * space.mu[s])[idle]
            weights[s] = scaled
        measures.append(decompose(opt, weights))
    return VectorDualVariable(t, tuple(measures), wbar)


# ===========================
# ⚖️ Penalty Identities
# ===========================

def _verdict(lhs: ConditionalPolyhedron, rhs: ConditionalPolyhedron, what: str) -> dict:
    if polyhedra.equals(lhs, rhs):
        return {"status": "pass"}
    logger.info(f"❌ {what}: the two sides differ")
    return {"status": "fail", "witness": {"lhs": lhs.as_dict(), "rhs": rhs.as_dict()}}


def penalty_decompose_check(aug: AugmentedProcessRiskMeasure, dual: VectorDualVariable) -> dict:
    """alpha-bar_t(Q-bar, w-bar) against sum_s alpha_(R_s)(w-bar_s) 1_s + alpha_t(W_t(Q-bar, w-bar)) 1_(T_t)."""
    m = aug.m
    opt = OptionalSpace(aug.layout.space)
    lifted = lift(aug).acceptance
    lhs = penalty_vector(lifted, dual, m, validate=False)
    parts = [penalty_restricted(R.acceptance, dual.wbar[R.time], m) for R in aug.restricted]
    parts.append(penalty_process(aug.process.acceptance, map_dual_to_process(opt, dual), m, validate=False))
    return _verdict(lhs, polyhedra.product(parts), f"penalty decomposition at time {aug.time}")


def penalty_reverse_check(aug: AugmentedProcessRiskMeasure, Qw: ProcessDualVariable,
                          restricted_weights: Optional[Dict[int, np.ndarray]] = None) -> dict:
    """alpha_(R_s)(w) = alpha-bar_t(P-bar, w 1_s) on the cells of s.

    Also alpha_t(Q, w) = alpha-bar_t(W-bar_t(Q, w)) on T_t.
    """
    m, space = aug.m, aug.layout.space
    opt = OptionalSpace(space)
    lifted = lift(aug).acceptance
    d = aug.layout.d
    checks = {}
    reference = reference_measure(space)
    for R in aug.restricted:
        s = R.time
        w = (restricted_weights or {}).get(s)
        if w is None:
            w = ones((space.n_states, d), space.exact)
        wbar = zeros((space.horizon + 1, space.n_states, d), space.exact)
        wbar[s] = w
        lifted_penalty = penalty_vector(lifted, VectorDualVariable(aug.time, (reference,) * d, wbar), m, validate=False)
        checks[f"restricted:{s}"] = _verdict(penalty_restricted(R.acceptance, w, m),
                                             polyhedra.restrict_labels(lifted_penalty, space.past_labels(s)),
                                             f"restricted penalty at time {s}")
    lifted_penalty = penalty_vector(lifted, map_dual_to_vector(opt, Qw), m, validate=False)
    checks["process"] = _verdict(penalty_process(aug.process.acceptance, Qw, m, validate=False),
                                 polyhedra.restrict_labels(lifted_penalty, space.future_labels(aug.time)),
                                 f"process penalty at time {aug.time}")
    failed = [key for key, item in checks.items() if item["status"] == "fail"]
    out = {"status": "fail" if failed else "pass", "parts": checks}
    return out


def dual_round_trip(opt: OptionalSpace, Qw: ProcessDualVariable) -> Tuple[bool, Optional[dict]]:
    """w_t^s(Q_s, w_s) = w_t^s(W_t(W-bar_t(Q, w))_s) for every s >= t."""
    space = opt.base
    back = map_dual_to_process(opt, map_dual_to_vector(opt, Qw))
    for s in range(Qw.t, space.horizon + 1):
        before = w_map(space, Qw.Q[s], Qw.w[s], Qw.t, s)
        after = w_map(space, back.Q[s], back.w[s], Qw.t, s)
        if not close(before, after, space.exact):
            return False, {"s": s, "before": as_floats(before), "after": as_floats(after)}
    return True, None


# ===========================
# 🧮 Full Eligibility (M = R^d)
# ===========================

def full_eligible_simplify(rbar: VectorRiskMeasure) -> Tuple[List[ConditionalPolyhedron], ProcessRiskMeasure]:
    """C_s = R-bar_t(0) on the cells of s, plus the process part rho_t."""
    A = rbar.acceptance
    if rbar.m < A.d:
        raise BridgeError(f"the simplification needs every asset eligible (m={rbar.m}, d={A.d})")
    space = A.space
    at_zero = rbar(zeros((space.horizon + 1, space.n_states, A.d), A.exact))
    C = [polyhedra.restrict_labels(at_zero, space.past_labels(s)) for s in range(A.time)]
    _, process = project_acceptance(A, rbar.m)
    return C, ProcessRiskMeasure(process, rbar.m)


def reconstruct(C: Sequence[ConditionalPolyhedron], rho: ProcessRiskMeasure, X) -> ConditionalPolyhedron:
    """sum_s (-X_s + C_s) 1_s + rho_t(X 1_(T_t)) 1_(T_t)."""
    space = rho.acceptance.space
    parts = []
    for s, Cs in enumerate(C):
        shift = {label: [-v for v in X[s, space.rep(s, label.index)]] for label in Cs.labels}
        parts.append(polyhedra.translate(Cs, shift))
    parts.append(rho(tail_field(X, rho.time)))
    return polyhedra.product(parts)


# ===========================
# 👑 Maximal Duals
# ===========================

def max_dual_correspondence(aug: AugmentedProcessRiskMeasure, vector_duals: Sequence[VectorDualVariable],
                            process_duals: Sequence[ProcessDualVariable]) -> dict:
    """Maximality of (Q-bar, w-bar) against maximality of every w-bar_s and of W_t(Q-bar, w-bar), and back."""
    space = aug.layout.space
    opt = OptionalSpace(space)
    lifted = lift(aug).acceptance
    d = aug.layout.d
    mismatches = []
    for k, dual in enumerate(vector_duals):
        whole, _ = is_max_dual_vector(lifted, dual)
        parts = [is_max_dual_restricted(R.acceptance, dual.wbar[R.time])[0] for R in aug.restricted]
        parts.append(is_max_dual_process(aug.process.acceptance, map_dual_to_process(opt, dual))[0])
        if whole != all(parts):
            mismatches.append({"direction": "vector", "dual": k, "lifted": whole, "components": parts})
    reference = reference_measure(space)
    for k, Qw in enumerate(process_duals):
        left, _ = is_max_dual_process(aug.process.acceptance, Qw)
        right, _ = is_max_dual_vector(lifted, map_dual_to_vector(opt, Qw))
        if left != right:
            mismatches.append({"direction": "process", "dual": k, "process": left, "lifted": right})
    for R in aug.restricted:
        w = ones((space.n_states, d), space.exact)
        wbar = zeros((space.horizon + 1, space.n_states, d), space.exact)
        wbar[R.time] = w
        left, _ = is_max_dual_restricted(R.acceptance, w)
        right, _ = is_max_dual_vector(lifted, VectorDualVariable(aug.time, (reference,) * d, wbar))
        if left != right:
            mismatches.append({"direction": "restricted", "time": R.time, "restricted": left, "lifted": right})
    status = "fail" if mismatches else "pass"
    out = {"status": status, "samples": len(vector_duals) + len(process_duals)}
    if mismatches:
        out["witness"] = mismatches[0]
    return out


# ===========================
# 🗂️ Families Over Time
# ===========================

@dataclass(frozen=True, eq=False)
class AugmentedFamily:
    """rho_t for every t and R_s^t for every s < t."""
    space: ScenarioSpace
    layout: CellLayout
    m: int
    process: Dict[int, ProcessRiskMeasure]
    restricted: Dict[Tuple[int, int], RestrictedRiskMeasure]

    def aug(self, t: int) -> AugmentedProcessRiskMeasure:
        return AugmentedProcessRiskMeasure(tuple(self.restricted[(s, t)] for s in range(t)), self.process[t])


@dataclass(frozen=True, eq=False)
class VectorFamily:
    space: ScenarioSpace
    layout: CellLayout
    m: int
    measures: Dict[int, VectorRiskMeasure]

    def __getitem__(self, t: int) -> VectorRiskMeasure:
        return self.measures[t]


def lift_family(family: AugmentedFamily) -> VectorFamily:
    measures = {t: lift(family.aug(t)) for t in family.space.times}
    return VectorFamily(family.space, family.layout, family.m, measures)


def project_family(family: VectorFamily, use_cache: bool = True) -> AugmentedFamily:
    process, restricted = {}, {}
    for t, rbar in family.measures.items():
        aug = project(rbar, use_cache)
        process[t] = aug.process
        for R in aug.restricted:
            restricted[(R.time, t)] = R
    return AugmentedFamily(family.space, family.layout, family.m, process, restricted)
