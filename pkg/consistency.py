import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import lp_backend
import polyhedra
from acceptance import CellLayout, tail_field
from bridge import AugmentedFamily, VectorFamily, lift_family, project_family
from polyhedra import ConditionalPolyhedron, Polyhedron
from space import as_floats, draw, zeros

# ===========================
# 🔧 Configuration
# ===========================
LP_CAP = 5000
SAMPLE_POINTS = 10_000
ANCHORS = 40
FIXTURE_KINDS = ("reflexive", "min_preserving", "dominated", "random_union")
SCOPE_NOTE = "comparison families are finite lists; arbitrary families are out of reach of a finite procedure"

logger = logging.getLogger("Consistency")


class _BudgetExceeded(Exception):
    pass


class _Budget:
    def __init__(self, cap: int):
        self.cap = cap
        self.used = 0

    def spend(self):
        self.used += 1
        if self.used > self.cap:
            raise _BudgetExceeded()


# ===========================
# 🧮 Union Inclusion
# ===========================

def _key(label) -> str:
    if isinstance(label, tuple):
        return ":".join(str(part) for part in label)
    return str(label)


def _as_single(P: ConditionalPolyhedron) -> ConditionalPolyhedron:
    return polyhedra.assemble((("joint", -1, 0),), [polyhedra.joint(P)])


def _poly_key(P: Polyhedron) -> tuple:
    if P.empty:
        return ("empty",)
    return (tuple(tuple(row) for row in P.A.tolist()), tuple(P.b.tolist()))


def _label_options(L: Polyhedron, rights: Sequence[Polyhedron], budget: _Budget) -> List[dict]:
    """Maximal sets of right-hand indices a single point of L can avoid at once, each with its point."""
    exact, tol = L.exact, polyhedra.tolerance(L.exact)
    groups: Dict[tuple, List[int]] = {}
    polys: List[Polyhedron] = []
    for j, R in enumerate(rights):
        key = _poly_key(R)
        if key not in groups:
            groups[key] = []
            polys.append(R)
        groups[key].append(j)
    members = list(groups.values())

    violable = []
    for R in polys:
        facets = []
        for f, (a, bound) in enumerate(zip(R.A, R.b)):
            budget.spend()
            res = polyhedra.lp_min(L, a)
            if res.status == lp_backend.UNBOUNDED or (res.optimal and res.value < bound - tol):
                facets.append(f)
        violable.append(facets)

    base = polyhedra.feasible_point(L)
    leaves = []

    def search(g: int, chosen: List[Tuple[int, int]], point):
        if g == len(polys):
            leaves.append((chosen, point))
            return
        for f in violable[g]:
            cuts = chosen + [(g, f)]
            budget.spend()
            res = lp_backend.maximize_slack(L.A, L.b, [polys[h].A[k] for h, k in cuts],
                                            [polys[h].b[k] for h, k in cuts], exact=exact)
            if res.optimal and res.value > (0 if exact else tol):
                search(g + 1, cuts, res.x)
        search(g + 1, chosen, point)

    search(0, [], base)
    options = []
    for chosen, point in leaves:
        mask = frozenset(j for g, _ in chosen for j in members[g])
        facets = {j: f for g, f in chosen for j in members[g]}
        options.append({"mask": mask, "point": point, "facets": facets})
    maximal = [o for o in options if not any(o["mask"] < other["mask"] for other in options)]
    unique, seen = [], set()
    for o in maximal:
        if o["mask"] not in seen:
            seen.add(o["mask"])
            unique.append(o)
    return unique


def _cover(labels: Sequence, options: Dict, target: frozenset) -> Optional[Dict]:
    """One option per atom whose masks together exclude every right-hand set."""
    order = list(labels)
    reach = [frozenset()] * (len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        reach[k] = reach[k + 1].union(*[o["mask"] for o in options[order[k]]])

    def search(k: int, covered: frozenset, picks: Dict):
        if covered >= target:
            return picks
        if k == len(order) or not (covered | reach[k]) >= target:
            return None
        for option in sorted(options[order[k]], key=lambda o: -len(o["mask"] - covered)):
            found = search(k + 1, covered | option["mask"], {**picks, order[k]: option})
            if found is not None:
                return found
        return None

    return search(0, frozenset(), {})


def _facet_midpoint(L: Polyhedron, a, bound) -> Optional[np.ndarray]:
    """A point of L strictly beyond {a.x >= bound}: halfway from the facet to the deepest point of L within 1."""
    exact = L.exact
    below = polyhedra.intersect(L, polyhedra.halfspaces([a], [bound - 1], exact, L.dim))
    res = polyhedra.lp_min(below, a)
    if res.status == lp_backend.INFEASIBLE:
        deep = polyhedra.feasible_point(L)
    elif res.optimal and res.value < bound - polyhedra.tolerance(exact):
        deep = res.x
    else:
        return None
    on = polyhedra.feasible_point(polyhedra.intersect(L, polyhedra.halfspaces([a, -a], [bound, -bound], exact, L.dim)))
    deep = np.asarray(deep, dtype=float)
    if on is None:
        return deep
    return (deep + np.asarray(on, dtype=float)) / 2


def _facet_crossings(left: ConditionalPolyhedron, rights: Sequence[ConditionalPolyhedron]) -> Optional[dict]:
    """Facet by facet of every right-hand set, a left point just across the facet, tested against the union."""
    anchor = {label: np.asarray(polyhedra.feasible_point(left.piece(label)), dtype=float) for label in left.labels}
    for j, R in enumerate(rights):
        for label in left.labels:
            piece = R.piece(label)
            for k, (a, bound) in enumerate(zip(piece.A, piece.b)):
                mid = _facet_midpoint(left.piece(label), a, bound)
                if mid is None:
                    continue
                x = dict(anchor)
                x[label] = mid
                if not any(polyhedra.contains_point(S, x) for S in rights):
                    return {"status": "fail", "tier": "midpoint",
                            "witness": {"points": {_key(l): as_floats(v) for l, v in x.items()},
                                        "facet": {"set": j, "atom": _key(label), "row": k}}}
    return None


def _sampled_inclusion(left: ConditionalPolyhedron, rights: Sequence[ConditionalPolyhedron],
                       rng: np.random.Generator, samples: int) -> dict:
    crossing = _facet_crossings(left, rights)
    if crossing is not None:
        return crossing
    anchors = {label: polyhedra.sample_points(left.piece(label), rng, count=ANCHORS) for label in left.labels}
    tested = 0
    for _ in range(samples):
        # jitter on scales from 1e-3 to 10 so thin slivers near the anchors are reached
        x = {}
        for label, cloud in anchors.items():
            base = cloud[int(rng.integers(len(cloud)))]
            x[label] = base + rng.exponential(1.0, len(base)) * 10 ** rng.uniform(-3, 1)
        if not polyhedra.contains_point(left, x):
            continue
        tested += 1
        if not any(polyhedra.contains_point(R, x) for R in rights):
            return {"status": "fail", "tier": "sampled",
                    "witness": {"points": {_key(l): as_floats(v) for l, v in x.items()}}}
    return {"status": "sampled", "samples": tested}


def union_inclusion(left: ConditionalPolyhedron, rights: Sequence[ConditionalPolyhedron],
                    rng: Optional[np.random.Generator] = None, cap: int = LP_CAP,
                    samples: int = SAMPLE_POINTS) -> dict:
    """Decides left within the union of `rights`.

    Every reported violation carries a point of the left set and, per
    right-hand set, the atom and facet it breaks.
    """
    if left.coupling is not None or any(R.coupling is not None for R in rights):
        left = _as_single(left)
        rights = [_as_single(R) for R in rights]
    if polyhedra.is_empty(left):
        return {"status": "pass", "lps": 0}
    rights = [R for R in rights if not polyhedra.is_empty(R)]
    if not rights:
        points = {_key(l): as_floats(polyhedra.feasible_point(p)) for l, p in zip(left.labels, left.pieces)}
        return {"status": "fail", "witness": {"points": points, "excluded_by": {}}}

    budget = _Budget(cap)
    try:
        options = {label: _label_options(left.piece(label), [R.piece(label) for R in rights], budget)
                   for label in left.labels}
    except _BudgetExceeded:
        logger.info(f"⚠️ Union inclusion over {len(rights)} sets exceeded {cap} LPs, sampling instead")
        return _sampled_inclusion(left, rights, rng or np.random.default_rng(0), samples)

    picks = _cover(left.labels, options, frozenset(range(len(rights))))
    if picks is None:
        return {"status": "pass", "lps": budget.used}
    points, excluded = {}, {}
    for label in left.labels:
        option = picks.get(label)
        if option is None:
            option = next(o for o in options[label] if o["point"] is not None)
        points[_key(label)] = as_floats(option["point"])
        for j, f in option["facets"].items():
            excluded.setdefault(j, [_key(label), f])
    return {"status": "fail", "lps": budget.used,
            "witness": {"points": points, "excluded_by": {str(j): v for j, v in sorted(excluded.items())}}}


# ===========================
# 🧷 Fixtures
# ===========================

@dataclass(frozen=True, eq=False)
class ProcessFixture:
    """rho_s(X) within the union of rho_s(B) implies the same at t after Z on [t, s)."""
    t: int
    s: int
    Z: np.ndarray
    X: np.ndarray
    B: tuple
    kind: str = "custom"


@dataclass(frozen=True, eq=False)
class VectorFixture:
    """Pivot X with a product family (`slots`: r < s -> F_r vectors, s -> processes) or a plain `family`."""
    t: int
    s: int
    X: np.ndarray
    slots: Optional[Dict[int, tuple]] = None
    family: Optional[tuple] = None
    kind: str = "custom"

    @property
    def product(self) -> bool:
        return self.slots is not None

    def members(self) -> List[np.ndarray]:
        if self.family is not None:
            return list(self.family)
        out = []
        past = [self.slots[r] for r in range(self.s)]
        for combo in itertools.product(*past, self.slots[self.s]):
            Y = np.array(tail_field(combo[-1], self.s), copy=True)
            for r, value in enumerate(combo[:-1]):
                Y[r] = value
            out.append(Y)
        return out


@dataclass(frozen=True, eq=False)
class RestrictedChainFixture:
    """R_r^s(X_r) within the unions of R_r^s(B_r) on [t, s) implies the process inclusion at t with tail Z."""
    t: int
    s: int
    X: Dict[int, np.ndarray]
    B: Dict[int, tuple]
    Z: np.ndarray
    kind: str = "custom"


@dataclass(frozen=True, eq=False)
class CrossHorizonFixture:
    """R_r^s(X) within the union of R_r^s(B) implies R_r^t(X) within the union of R_r^t(B), for r < t < s."""
    r: int
    t: int
    s: int
    X: np.ndarray
    B: tuple
    kind: str = "custom"


def _row(layout: CellLayout, rng: np.random.Generator, r: int, low: float, high: float) -> np.ndarray:
    space = layout.space
    out = zeros((space.n_states, layout.d), layout.exact)
    for a in range(len(space.partitions[r])):
        out[space.members(r, a)] = draw(rng, low, high, layout.d, layout.exact)
    return out


def random_field(layout: CellLayout, rng: np.random.Generator, rows: Sequence[int],
                 low: float = -3.0, high: float = 3.0) -> np.ndarray:
    space = layout.space
    out = zeros((space.horizon + 1, space.n_states, layout.d), layout.exact)
    for r in rows:
        out[r] = _row(layout, rng, r, low, high)
    return out


def _min_preserving(layout: CellLayout, rng: np.random.Generator, s: int) -> Tuple[np.ndarray, np.ndarray]:
    """Y and X >= Y with the same minimum over T_s on every F_s-atom, the minimum sitting at time T."""
    space, exact = layout.space, layout.exact
    T = space.horizon
    Y = random_field(layout, rng, range(s, T + 1))
    X = np.array(Y, copy=True)
    for a in range(len(space.partitions[s])):
        target = space.rep(T, space.descendants(s, a, T)[0])
        cells = [(r, b) for r in range(s, T + 1) for b in space.descendants(s, a, r)]
        for i in range(layout.d):
            others = [Y[r, space.rep(r, b), i] for (r, b) in cells if (r, space.rep(r, b)) != (T, target)]
            if others:
                Y[T, target, i] = min(others) - draw(rng, 0.5, 1.5, 1, exact)[0]
            X[T, target, i] = Y[T, target, i]
            for (r, b) in cells:
                if (r, space.rep(r, b)) == (T, target):
                    continue
                idx = space.members(r, b)
                X[r, idx, i] = Y[r, idx, i] + draw(rng, 0.5, 2.0, 1, exact)[0]
    return X, Y


def _fixture(layout: CellLayout, rng: np.random.Generator, t: int, s: int, kind: str, product: bool) -> VectorFixture:
    space = layout.space
    T = space.horizon
    if kind == "min_preserving":
        X, Y = _min_preserving(layout, rng, s)
        past = random_field(layout, rng, range(s), 2.0, 4.0)
        X[:s] = past[:s]
        Y[:s] = past[:s]
        alternatives = [Y]
    elif kind == "dominated":
        X = random_field(layout, rng, space.times)
        alternatives = [X + random_field(layout, rng, space.times, 0.0, 2.0)]
    elif kind == "random_union":
        X = random_field(layout, rng, space.times)
        alternatives = [random_field(layout, rng, space.times) for _ in range(2)]
    else:
        X = random_field(layout, rng, space.times)
        alternatives = [X]
    if not product:
        return VectorFixture(t, s, X, family=tuple(alternatives), kind=kind)
    if kind == "random_union":
        slots = {r: tuple(_row(layout, rng, r, -3.0, 3.0) for _ in range(2)) for r in range(s)}
    else:
        slots = {r: tuple(np.array(Y[r], copy=True) for Y in alternatives) for r in range(s)}
    slots[s] = tuple(alternatives)
    return VectorFixture(t, s, X, slots=slots, kind=kind)


def generate_fixtures(layout: CellLayout, rng: np.random.Generator, count: int = 4, product: bool = True,
                      kinds: Sequence[str] = FIXTURE_KINDS) -> List[VectorFixture]:
    """`count` fixtures per pair t < s, cycling through the kinds."""
    fixtures = []
    for t in range(layout.space.horizon):
        for s in range(t + 1, layout.space.horizon + 1):
            for k in range(count):
                fixtures.append(_fixture(layout, rng, t, s, kinds[k % len(kinds)], product))
    return fixtures


def process_fixtures(fixtures: Sequence[VectorFixture]) -> List[ProcessFixture]:
    return [ProcessFixture(F.t, F.s, F.X, F.X, tuple(F.slots[F.s]), F.kind) for F in fixtures if F.product]


# ===========================
# ✅ Implications
# ===========================

def _implication(hypothesis, conclusion) -> dict:
    """hypothesis and conclusion are thunks returning union_inclusion results."""
    hyp = hypothesis()
    if hyp["status"] == "fail":
        return {"verdict": "vacuous", "hypothesis": hyp["status"]}
    concl = conclusion()
    out = {"hypothesis": hyp["status"], "conclusion": concl["status"]}
    if concl["status"] == "pass":
        out["verdict"] = "holds"
    elif concl["status"] == "fail" and hyp["status"] == "pass":
        out["verdict"] = "violated"
        out["witness"] = concl.get("witness")
    else:
        out["verdict"] = "sampled"
    return out


def _all_pass(results: Sequence[dict]) -> dict:
    if any(r["status"] == "fail" for r in results):
        return {"status": "fail"}
    if any(r["status"] != "pass" for r in results):
        return {"status": "sampled"}
    return {"status": "pass"}


def _summarize(records: List[dict], name: str) -> dict:
    violated = [r for r in records if r["verdict"] == "violated"]
    sampled = [r for r in records if r["verdict"] == "sampled"]
    status = "fail" if violated else ("sampled" if sampled else "pass")
    out = {"status": status, "fixtures": len(records), "scope": SCOPE_NOTE,
           "verdicts": {v: sum(1 for r in records if r["verdict"] == v)
                        for v in ("holds", "vacuous", "violated", "sampled")}}
    if violated:
        out["witness"] = violated[0]
        logger.info(f"❌ {name}: {len(violated)} of {len(records)} fixtures violated")
    return out


def _with(Z: np.ndarray, t: int, s: int, tail: np.ndarray) -> np.ndarray:
    """Z on [t, s), tail on T_s, zero before t."""
    out = np.array(tail_field(tail, s), copy=True)
    out[t:s] = Z[t:s]
    return out


def process_implication(process: Dict, F: ProcessFixture, rng: Optional[np.random.Generator] = None) -> dict:
    rho_s, rho_t = process[F.s], process[F.t]
    record = _implication(
        lambda: union_inclusion(rho_s(F.X), [rho_s(Y) for Y in F.B], rng),
        lambda: union_inclusion(rho_t(_with(F.Z, F.t, F.s, F.X)), [rho_t(_with(F.Z, F.t, F.s, Y)) for Y in F.B], rng),
    )
    record.update({"t": F.t, "s": F.s, "kind": F.kind})
    return record


def check_mptc_process(process: Dict, fixtures: Sequence[ProcessFixture],
                       rng: Optional[np.random.Generator] = None) -> dict:
    return _summarize([process_implication(process, F, rng) for F in fixtures], "process time consistency")


def vector_implication(family: VectorFamily, F: VectorFixture, rng: Optional[np.random.Generator] = None) -> dict:
    Rs, Rt = family[F.s], family[F.t]
    members = F.members()
    record = _implication(
        lambda: union_inclusion(Rs(F.X), [Rs(Y) for Y in members], rng),
        lambda: union_inclusion(Rt(F.X), [Rt(Y) for Y in members], rng),
    )
    record.update({"t": F.t, "s": F.s, "kind": F.kind, "product": F.product})
    return record


def check_mptc_vector(family: VectorFamily, fixtures: Sequence[VectorFixture],
                      rng: Optional[np.random.Generator] = None) -> dict:
    return _summarize([vector_implication(family, F, rng) for F in fixtures], "vector time consistency")


def chain_implication(family: AugmentedFamily, F: RestrictedChainFixture,
                      rng: Optional[np.random.Generator] = None) -> dict:
    rows = list(range(F.t, F.s))
    rho_t = family.process[F.t]

    def hypothesis():
        results = []
        for r in rows:
            R = family.restricted[(r, F.s)]
            results.append(union_inclusion(R(F.X[r]), [R(b) for b in F.B[r]], rng))
        return _all_pass(results)

    def position(values):
        out = np.array(tail_field(F.Z, F.s), copy=True)
        for r, value in zip(rows, values):
            out[r] = value
        return out

    def conclusion():
        combos = [position(c) for c in itertools.product(*[F.B[r] for r in rows])]
        return union_inclusion(rho_t(position([F.X[r] for r in rows])), [rho_t(Y) for Y in combos], rng)

    record = _implication(hypothesis, conclusion)
    record.update({"t": F.t, "s": F.s, "kind": F.kind})
    return record


def cross_implication(family: AugmentedFamily, F: CrossHorizonFixture,
                      rng: Optional[np.random.Generator] = None) -> dict:
    Rs, Rt = family.restricted[(F.r, F.s)], family.restricted[(F.r, F.t)]
    record = _implication(
        lambda: union_inclusion(Rs(F.X), [Rs(b) for b in F.B], rng),
        lambda: union_inclusion(Rt(F.X), [Rt(b) for b in F.B], rng),
    )
    record.update({"r": F.r, "t": F.t, "s": F.s, "kind": F.kind})
    return record


@dataclass
class JointFixtures:
    process: List[ProcessFixture] = field(default_factory=list)
    chain: List[RestrictedChainFixture] = field(default_factory=list)
    cross: List[CrossHorizonFixture] = field(default_factory=list)

    def extend(self, other: "JointFixtures"):
        self.process.extend(other.process)
        self.chain.extend(other.chain)
        self.cross.extend(other.cross)

    def __len__(self) -> int:
        return len(self.process) + len(self.chain) + len(self.cross)


def _joint_records(family: AugmentedFamily, fixtures: JointFixtures, rng) -> Dict[str, List[dict]]:
    return {
        "process": [process_implication(family.process, F, rng) for F in fixtures.process],
        "chain": [chain_implication(family, F, rng) for F in fixtures.chain],
        "cross": [cross_implication(family, F, rng) for F in fixtures.cross],
    }


def check_joint_mptc(family: AugmentedFamily, fixtures: JointFixtures,
                     rng: Optional[np.random.Generator] = None) -> dict:
    """The three joint conditions: process consistency, restricted-to-process, and across horizons."""
    records = _joint_records(family, fixtures, rng)
    parts = {
        "process": _summarize(records["process"], "joint condition on rho"),
        "restricted_to_process": _summarize(records["chain"], "joint restricted-to-process condition"),
        "cross_horizon": _summarize(records["cross"], "joint cross-horizon condition"),
    }
    overall = _summarize([r for group in records.values() for r in group], "joint time consistency")
    overall["conditions"] = parts
    return overall


def derive_joint_fixtures(F: VectorFixture) -> JointFixtures:
    """Joint-condition fixtures carrying the same comparison as a product-form vector fixture."""
    if not F.product:
        return JointFixtures()
    t, s = F.t, F.s
    rows = list(range(t, s))
    out = JointFixtures()
    heads = [np.array(F.X, copy=True)]
    for combo in itertools.product(*[F.slots[r] for r in rows]):
        Z = zeros(F.X.shape, F.X.dtype == object)
        for r, value in zip(rows, combo):
            Z[r] = value
        if not any(np.array_equal(Z[t:s], H[t:s]) for H in heads):
            heads.append(Z)
    for Z in heads:
        out.process.append(ProcessFixture(t, s, Z, F.X, tuple(F.slots[s]), f"{F.kind}/process"))
    out.chain.append(RestrictedChainFixture(t, s, {r: F.X[r] for r in rows}, {r: tuple(F.slots[r]) for r in rows},
                                            tail_field(F.X, s), f"{F.kind}/chain"))
    for r in range(t):
        out.cross.append(CrossHorizonFixture(r, t, s, F.X[r], tuple(F.slots[r]), f"{F.kind}/cross"))
    return out


def embed(fixture, layout: CellLayout) -> VectorFixture:
    """The product-form vector fixture carrying the same comparison as a joint-condition fixture."""
    space, exact = layout.space, layout.exact
    blank_row = zeros((space.n_states, layout.d), exact)
    blank = zeros((space.horizon + 1, space.n_states, layout.d), exact)
    kind = f"{fixture.kind}/embedded"
    if isinstance(fixture, CrossHorizonFixture):
        X = np.array(blank, copy=True)
        X[fixture.r] = fixture.X
        slots = {u: (blank_row,) for u in range(fixture.s)}
        slots[fixture.r] = tuple(fixture.B)
        slots[fixture.s] = (blank,)
        return VectorFixture(fixture.t, fixture.s, X, slots=slots, kind=kind)
    t, s = fixture.t, fixture.s
    slots = {u: (blank_row,) for u in range(t)}
    if isinstance(fixture, RestrictedChainFixture):
        X = np.array(tail_field(fixture.Z, s), copy=True)
        for r, value in fixture.X.items():
            X[r] = value
        slots.update({r: tuple(fixture.B[r]) for r in range(t, s)})
        slots[s] = (fixture.Z,)
        return VectorFixture(t, s, X, slots=slots, kind=kind)
    X = _with(fixture.Z, t, s, fixture.X)
    slots.update({r: (np.array(fixture.Z[r], copy=True),) for r in range(t, s)})
    slots[s] = tuple(fixture.B)
    return VectorFixture(t, s, X, slots=slots, kind=kind)


def _broken(records: Sequence[dict]) -> Optional[bool]:
    """True on a violation, False when every record is decided without one, None when only sampled."""
    if any(r["verdict"] == "violated" for r in records):
        return True
    if any(r["verdict"] == "sampled" for r in records):
        return None
    return False


def _compare(family: AugmentedFamily, vectors: VectorFamily, fixtures: Sequence[VectorFixture], rng) -> dict:
    layout = family.layout
    mismatches, undecided = [], 0
    joint_broken = vector_broken = 0
    for k, F in enumerate(fixtures):
        derived = derive_joint_fixtures(F)
        joint = [r for group in _joint_records(family, derived, rng).values() for r in group]
        vector_side = [F] + [embed(jf, layout) for jf in derived.process + derived.chain + derived.cross]
        vector = [vector_implication(vectors, G, rng) for G in vector_side]
        left, right = _broken(joint), _broken(vector)
        joint_broken += bool(left)
        vector_broken += bool(right)
        if left is None or right is None:
            undecided += 1
            continue
        if left != right:
            mismatches.append({"fixture": k, "t": F.t, "s": F.s, "kind": F.kind,
                               "joint_violated": left, "vector_violated": right})
    status = "fail" if mismatches else ("sampled" if undecided else "pass")
    out = {"status": status, "fixtures": len(fixtures), "undecided": undecided,
           "joint_violations": joint_broken, "vector_violations": vector_broken}
    if mismatches:
        out["witness"] = mismatches[0]
        logger.warning(f"❌ Joint and vector verdicts disagree on {len(mismatches)} fixtures")
    return out


def equivalence_harness(family: AugmentedFamily, fixtures: Sequence[VectorFixture],
                        vectors: Optional[VectorFamily] = None, rng: Optional[np.random.Generator] = None) -> dict:
    """Joint consistency of (rho, R) against consistency of the lifted measures.

    The backward pass compares R-bar against its own projection.
    """
    lifted = lift_family(family)
    vectors = lifted if vectors is None else vectors
    forward = _compare(family, lifted, fixtures, rng)
    backward = _compare(project_family(vectors, use_cache=False), vectors, fixtures, rng)
    parts = [forward, backward]
    if any(p["status"] == "fail" for p in parts):
        status = "fail"
    elif any(p["status"] == "sampled" for p in parts):
        status = "sampled"
    else:
        status = "pass"
    out = {"status": status, "lift": forward, "project": backward, "scope": SCOPE_NOTE}
    for p in parts:
        if "witness" in p:
            out["witness"] = p["witness"]
            break
    return out


# ===========================
# 🪜 One-Step Chains
# ===========================

def one_step_chain(F: ProcessFixture) -> List[ProcessFixture]:
    """Single-period fixtures (u, u+1) for u = s-1 down to t whose chained conclusions give F's."""
    chain = []
    for u in range(F.s - 1, F.t - 1, -1):
        pivot = _with(F.Z, u + 1, F.s, F.X)
        others = tuple(_with(F.Z, u + 1, F.s, Y) for Y in F.B)
        chain.append(ProcessFixture(u, u + 1, F.Z, pivot, others, f"{F.kind}/step"))
    return chain


def check_one_step(process: Dict, fixtures: Sequence[ProcessFixture],
                   rng: Optional[np.random.Generator] = None) -> dict:
    """A violation on a multi-period fixture shows up on one of its single-period links."""
    long = [F for F in fixtures if F.s >= F.t + 2]
    if not long:
        return {"status": "skipped", "reason": "no fixtures spanning two or more periods"}
    direct_violations = chain_violations = undecided = 0
    for k, F in enumerate(long):
        direct = process_implication(process, F, rng)
        steps = [process_implication(process, G, rng) for G in one_step_chain(F)]
        if direct["verdict"] == "sampled" or any(r["verdict"] == "sampled" for r in steps):
            undecided += 1
            continue
        broken = any(r["verdict"] == "violated" for r in steps)
        direct_violations += direct["verdict"] == "violated"
        chain_violations += broken
        if direct["verdict"] == "violated" and not broken:
            logger.warning(f"❌ Fixture ({F.t}, {F.s}) violated directly but not along its one-step chain")
            return {"status": "fail", "fixtures": len(long),
                    "witness": {"fixture": k, "t": F.t, "s": F.s, "direct": direct}}
    return {"status": "sampled" if undecided else "pass", "fixtures": len(long), "undecided": undecided,
            "direct_violations": direct_violations, "chain_violations": chain_violations}


# ===========================
# 🔄 Recursive Relation
# ===========================

def _capital_points(P: ConditionalPolyhedron, rng: np.random.Generator, count: int) -> List[Dict]:
    """Points of a decomposable conditional polyhedron: vertex combinations plus sampled points."""
    clouds = {}
    for label, piece in zip(P.labels, P.pieces):
        vertices, _, _ = polyhedra.generators(piece)
        samples = polyhedra.sample_points(piece, rng, count=count)
        clouds[label] = [np.asarray(v, dtype=object if P.exact else float) for v in vertices] + samples
    points = []
    for k in range(count):
        points.append({label: cloud[k % len(cloud)] for label, cloud in clouds.items()})
    return points


def check_recursive_relation(vectors: VectorFamily, rng: np.random.Generator, samples: int = 4,
                             points: int = 8) -> dict:
    """R-bar_t(-Z) within R-bar_t(X) for capital Z in R-bar_s(X), and how far those sets cover R-bar_t(X)."""
    layout, m = vectors.layout, vectors.m
    space = layout.space
    zero = zeros((space.horizon + 1, space.n_states, layout.d), layout.exact)
    checked = covered = targets = 0
    for t in range(space.horizon):
        for s in range(t + 1, space.horizon + 1):
            Rs, Rt = vectors[s], vectors[t]
            at_zero = Rs(zero)
            if not polyhedra.contains_point(at_zero, {label: [0] * m for label in at_zero.labels}):
                return {"status": "skipped", "reason": f"R-bar_{s}(0) does not contain 0"}
            for _ in range(samples):
                X = random_field(layout, rng, space.times)
                value_s, value_t = Rs(X), Rt(X)
                if value_s.coupling is not None or value_t.coupling is not None or polyhedra.is_empty(value_s):
                    continue
                parts = []
                for z in _capital_points(value_s, rng, points):
                    negated = {label: [-v for v in vec] for label, vec in z.items()}
                    image = Rt(layout.capital_field(value_s.labels, negated, m))
                    checked += 1
                    if not polyhedra.subset_of(image, value_t):
                        logger.info(f"❌ Recursive relation broken between times {t} and {s}")
                        return {"status": "fail", "checked": checked,
                                "witness": {"t": t, "s": s, "X": as_floats(X),
                                            "capital": {_key(l): as_floats(v) for l, v in z.items()}}}
                    parts.append(image)
                for u in _capital_points(value_t, rng, points):
                    targets += 1
                    covered += any(polyhedra.contains_point(image, u) for image in parts)
    status = "pass" if covered == targets else "sampled"
    return {"status": status, "checked": checked,
            "cover": {"tier": "sampled", "covered": covered, "points": targets}}
