import logging
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import cdd
import numpy as np

import lp_backend
from lp_backend import LPResult

# ===========================
# 🔧 Configuration
# ===========================
ABS_TOL = 1e-7
DD_MAX_DIM = 3

logger = logging.getLogger("Polyhedra")


class PolyhedronError(ValueError):
    """Operands that cannot be combined (dimension or atom mismatch, negative scaling)."""


_tolerance: ContextVar[float] = ContextVar("polyhedra_tolerance", default=ABS_TOL)


@contextmanager
def tolerance_scope(tol: float):
    """Float tolerance for the LP and set comparisons run inside the block (per thread and task)."""
    token = _tolerance.set(float(tol))
    try:
        yield
    finally:
        _tolerance.reset(token)


def tolerance(exact: bool) -> float:
    return 0 if exact else _tolerance.get()


def _resolve(tol: Optional[float], exact: bool) -> float:
    """Explicit tolerances apply to float polyhedra only; rational ones compare exactly."""
    if exact:
        return 0
    return tolerance(False) if tol is None else tol


def _num(value, exact: bool):
    return Fraction(value) if exact and not isinstance(value, Fraction) else (value if exact else float(value))


def _mat(rows, n: int, exact: bool) -> np.ndarray:
    dtype = object if exact else float
    if len(rows) == 0:
        return np.zeros((0, n), dtype=dtype)
    return np.asarray(rows, dtype=dtype).reshape(-1, n)


# ===========================
# 🔷 Single-Atom Polyhedra
# ===========================

@dataclass(frozen=True, eq=False)
class Polyhedron:
    """{x : A x >= b} in R^n, or the empty set."""
    A: np.ndarray
    b: np.ndarray
    empty: bool = False
    exact: bool = False

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def n_facets(self) -> int:
        return self.A.shape[0]

    def as_dict(self) -> dict:
        if self.empty:
            return {"empty": True}
        return {"A": [[float(v) for v in row] for row in self.A], "b": [float(v) for v in self.b]}


def halfspaces(A, b, exact: bool = False, n: Optional[int] = None) -> Polyhedron:
    """Builds {A x >= b}, dropping zero rows and flagging infeasible ones."""
    if n is None:
        n = np.asarray(A).shape[-1]
    A = _mat([[_num(v, exact) for v in row] for row in np.asarray(A, dtype=object).reshape(-1, n)], n, exact)
    b = np.asarray([_num(v, exact) for v in np.asarray(b, dtype=object).reshape(-1)], dtype=object if exact else float)
    tol = tolerance(exact)
    keep = []
    for i in range(A.shape[0]):
        if all(abs(v) <= (0 if exact else 1e-12) for v in A[i]):
            if b[i] > tol:
                return empty_set(n, exact)
            continue
        keep.append(i)
    return Polyhedron(A[keep], b[keep], False, exact)


def whole(n: int, exact: bool = False) -> Polyhedron:
    return Polyhedron(_mat([], n, exact), np.zeros(0, dtype=object if exact else float), False, exact)


def empty_set(n: int, exact: bool = False) -> Polyhedron:
    return Polyhedron(_mat([], n, exact), np.zeros(0, dtype=object if exact else float), True, exact)


def point_set(x, exact: bool = False) -> Polyhedron:
    x = [_num(v, exact) for v in x]
    n = len(x)
    eye = np.eye(n)
    A = np.vstack([eye, -eye])
    b = list(x) + [-v for v in x]
    return halfspaces(A, b, exact, n)


def orthant(n: int, shift=None, exact: bool = False) -> Polyhedron:
    """x >= shift componentwise (shift defaults to 0)."""
    shift = [0] * n if shift is None else list(shift)
    return halfspaces(np.eye(n), shift, exact, n)


def lp_min(P: Polyhedron, c) -> LPResult:
    if P.empty:
        return LPResult(lp_backend.INFEASIBLE)
    return lp_backend.minimize(c, P.A, P.b, exact=P.exact)


def is_empty(P) -> bool:
    if isinstance(P, ConditionalPolyhedron):
        if any(is_empty(piece) for piece in P.pieces):
            return True
        return P.coupling is not None and is_empty(joint(P))
    if P.empty:
        return True
    if P.n_facets == 0:
        return False
    zero = [0] * P.dim
    return lp_min(P, zero).status == lp_backend.INFEASIBLE


def is_whole(P: Polyhedron) -> bool:
    return not P.empty and P.n_facets == 0


def feasible_point(P: Polyhedron) -> Optional[np.ndarray]:
    if P.empty:
        return None
    res = lp_min(P, [0] * P.dim)
    return res.x if res.optimal else None


def contains_point(P, x, tol: Optional[float] = None) -> bool:
    if isinstance(P, ConditionalPolyhedron):
        return _conditional_contains(P, x, tol)
    if P.empty:
        return False
    if P.n_facets == 0:
        return True
    tol = _resolve(tol, P.exact)
    x = np.asarray(x, dtype=object if P.exact else float)
    return bool(np.all(P.A.dot(x) >= P.b - tol))


def translate(P, v):
    """P + v."""
    if isinstance(P, ConditionalPolyhedron):
        pieces = tuple(translate(piece, v[label]) for label, piece in zip(P.labels, P.pieces))
        coupling = None
        if P.coupling is not None:
            coupling = translate(P.coupling, [x for label in P.labels for x in v[label]])
        return ConditionalPolyhedron(P.labels, pieces, coupling)
    if P.empty or P.n_facets == 0:
        return P
    v = np.asarray([_num(x, P.exact) for x in v], dtype=object if P.exact else float)
    return Polyhedron(P.A, P.b + P.A.dot(v), False, P.exact)


def intersect(P, Q):
    if isinstance(P, ConditionalPolyhedron):
        _same_labels(P, Q)
        pieces = tuple(intersect(a, b) for a, b in zip(P.pieces, Q.pieces))
        coupling = _merge_coupling(P.coupling, Q.coupling)
        return ConditionalPolyhedron(P.labels, pieces, coupling)
    if P.dim != Q.dim:
        raise PolyhedronError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    if P.empty or Q.empty:
        return empty_set(P.dim, P.exact)
    return Polyhedron(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]), False, P.exact)


def subset_of(P, Q, tol: Optional[float] = None) -> bool:
    """P within Q: one LP per facet of Q, plus emptiness checks."""
    if isinstance(P, ConditionalPolyhedron):
        _same_labels(P, Q)
        if P.coupling is None and Q.coupling is None:
            if any(is_empty(piece) for piece in P.pieces):
                return True
            return all(subset_of(a, b, tol) for a, b in zip(P.pieces, Q.pieces))
        return subset_of(joint(P), joint(Q), tol)
    tol = _resolve(tol, P.exact)
    if is_empty(P):
        return True
    if Q.empty:
        return False
    for a, bound in zip(Q.A, Q.b):
        res = lp_min(P, a)
        if res.status == lp_backend.UNBOUNDED:
            return False
        if res.optimal and res.value < bound - tol:
            return False
    return True


def violated_facet(P: Polyhedron, Q: Polyhedron, tol: Optional[float] = None) -> Optional[dict]:
    """A facet of Q with a point of P beyond it, or None when P is inside Q."""
    tol = _resolve(tol, P.exact)
    if is_empty(P):
        return None
    if Q.empty:
        return {"facet": None, "point": [float(v) for v in feasible_point(P)]}
    for k, (a, bound) in enumerate(zip(Q.A, Q.b)):
        res = lp_min(P, a)
        if res.status == lp_backend.UNBOUNDED:
            return {"facet": k, "value": "-inf"}
        if res.optimal and res.value < bound - tol:
            return {"facet": k, "value": float(res.value), "bound": float(bound),
                    "point": [float(v) for v in res.x]}
    return None


def equals(P, Q, tol: Optional[float] = None) -> bool:
    return subset_of(P, Q, tol) and subset_of(Q, P, tol)


def scale(P: Polyhedron, lam) -> Polyhedron:
    """lam * P for lam >= 0; 0 * P is {0} for nonempty P."""
    if lam < 0:
        raise PolyhedronError(f"negative scaling factor {lam}")
    if P.empty:
        return P
    if lam == 0:
        return point_set([0] * P.dim, P.exact)
    lam = _num(lam, P.exact)
    return Polyhedron(P.A, P.b * lam, False, P.exact)


def minkowski_diff(P, Q):
    """P -. Q = {m : Q + m within P}."""
    if isinstance(P, ConditionalPolyhedron):
        _same_labels(P, Q)
        _require_decomposable(P, Q)
        return ConditionalPolyhedron(P.labels, tuple(minkowski_diff(a, b) for a, b in zip(P.pieces, Q.pieces)))
    if is_empty(Q):
        return whole(P.dim, P.exact)
    if P.empty:
        return P
    rows, rhs = [], []
    for a, bound in zip(P.A, P.b):
        res = lp_min(Q, a)
        if res.status == lp_backend.UNBOUNDED:
            return empty_set(P.dim, P.exact)
        rows.append(a)
        rhs.append(bound - res.value)
    return halfspaces(_mat(rows, P.dim, P.exact), rhs, P.exact, P.dim)


def _unit_direction(a: np.ndarray, exact: bool):
    if exact:
        scale_by = max(abs(v) for v in a)
        return tuple(v / scale_by for v in a), scale_by
    norm = float(np.linalg.norm(a.astype(float)))
    return tuple(np.round(a.astype(float) / norm, 12)), norm


def _single_direction(P: Polyhedron, Q: Polyhedron) -> Optional[Tuple[tuple, object, object]]:
    """If all normals of P and Q are positively proportional, the common direction and offsets."""
    direction = None
    offsets = {}
    for name, poly in (("P", P), ("Q", Q)):
        best = None
        for a, bound in zip(poly.A, poly.b):
            unit, size = _unit_direction(a, poly.exact)
            if direction is None:
                direction = unit
            elif not np.allclose(np.asarray(unit, dtype=float), np.asarray(direction, dtype=float), atol=1e-12):
                return None
            value = bound / size
            best = value if best is None or value > best else best
        offsets[name] = best
    return direction, offsets["P"], offsets["Q"]


def minkowski_sum(P, Q):
    """Closed Minkowski sum P + Q."""
    if isinstance(P, ConditionalPolyhedron):
        _same_labels(P, Q)
        _require_decomposable(P, Q)
        return ConditionalPolyhedron(P.labels, tuple(minkowski_sum(a, b) for a, b in zip(P.pieces, Q.pieces)))
    if P.dim != Q.dim:
        raise PolyhedronError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    if is_empty(P) or is_empty(Q):
        return empty_set(P.dim, P.exact)
    if is_whole(P) or is_whole(Q):
        return whole(P.dim, P.exact)
    common = _single_direction(P, Q)
    if common is not None:
        direction, off_p, off_q = common
        return halfspaces([list(direction)], [off_p + off_q], P.exact, P.dim)
    if P.dim <= DD_MAX_DIM:
        return _sum_double_description(P, Q)
    logger.warning(f"⚠️ Minkowski sum in dimension {P.dim}: support-function outer representation")
    return _sum_support(P, Q)


def _cdd_type(exact: bool) -> str:
    return "fraction" if exact else "float"


def _h_rows(P: Polyhedron) -> list:
    """cdd inequality rows [-bound, a] for a.x >= bound."""
    n = P.dim
    if P.n_facets == 0:
        rows = [[0] * (n + 1)]
    else:
        rows = [[-bound] + list(a) for a, bound in zip(P.A, P.b)]
    conv = Fraction if P.exact else float
    return [[conv(v) for v in row] for row in rows]


def _h_matrix(P: Polyhedron):
    mat = cdd.Matrix(_h_rows(P), number_type=_cdd_type(P.exact))
    mat.rep_type = cdd.RepType.INEQUALITY
    return mat


def run_double_description(rows, linear_rows, rep_type, number_type: str):
    """The other representation of the cdd matrix given by `rows` (plus `linear_rows` as linearities)."""
    mat = cdd.Matrix(rows, number_type=number_type)
    if linear_rows:
        mat.extend(linear_rows, linear=True)
    mat.rep_type = rep_type
    poly = cdd.Polyhedron(mat)
    return poly.get_generators() if rep_type == cdd.RepType.INEQUALITY else poly.get_inequalities()


def _convert(rows, linear_rows, rep_type, exact: bool):
    """Float conversions that cdd reports as numerically inconsistent are redone in rational arithmetic."""
    try:
        return run_double_description(rows, linear_rows, rep_type, _cdd_type(exact))
    except RuntimeError as e:
        if exact:
            raise
        logger.warning(f"⚠️ Float double description failed ({e}); retrying with fractions")
        rational = lambda block: [[Fraction(v) for v in row] for row in block]
        return run_double_description(rational(rows), rational(linear_rows), rep_type, "fraction")


def generators(P: Polyhedron) -> Tuple[List, List, List]:
    """Points, rays and lines of P by double description."""
    if P.empty:
        return [], [], []
    rows = _h_rows(P)
    gen = _convert(rows, [], cdd.RepType.INEQUALITY, P.exact)
    if gen.row_size == 0:
        return [], [], []
    lines = set(gen.lin_set)
    points, rays, lin = [], [], []
    for i in range(gen.row_size):
        row = list(gen[i])
        vec = [Fraction(v) for v in row[1:]] if P.exact else [float(v) for v in row[1:]]
        if i in lines:
            lin.append(vec)
        elif row[0] == 0:
            rays.append(vec)
        else:
            lead = Fraction(row[0]) if P.exact else float(row[0])
            points.append([v / lead for v in vec])
    if not points:
        # cones keep the origin implicit
        zero = Fraction(0) if P.exact else 0.0
        points.append([zero] * P.dim)
    return points, rays, lin


def from_generators(points, rays, lines, n: int, exact: bool = False) -> Polyhedron:
    if not points:
        return empty_set(n, exact)
    conv = Fraction if exact else float
    rows = [[conv(1)] + [conv(v) for v in p] for p in points]
    rows += [[conv(0)] + [conv(v) for v in r] for r in rays]
    linear_rows = [[conv(0)] + [conv(v) for v in l] for l in lines]
    ineq = _convert(rows, linear_rows, cdd.RepType.GENERATOR, exact)
    equalities = set(ineq.lin_set)
    A, b = [], []
    for i in range(ineq.row_size):
        row = [conv(v) for v in ineq[i]]
        A.append(row[1:])
        b.append(-row[0])
        if i in equalities:
            A.append([-v for v in row[1:]])
            b.append(row[0])
    if not A:
        return whole(n, exact)
    return halfspaces(_mat(A, n, exact), b, exact, n)


def _sum_double_description(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    pp, pr, pl = generators(P)
    qp, qr, ql = generators(Q)
    points = [[x + y for x, y in zip(p, q)] for p in pp for q in qp]
    return from_generators(points, pr + qr, pl + ql, P.dim, P.exact)


def _sum_support(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    rows, rhs, seen = [], [], set()
    for a in list(P.A) + list(Q.A):
        key, _ = _unit_direction(np.asarray(a), P.exact)
        if key in seen:
            continue
        seen.add(key)
        vp, vq = lp_min(P, a), lp_min(Q, a)
        if vp.optimal and vq.optimal:
            rows.append(a)
            rhs.append(vp.value + vq.value)
    return halfspaces(_mat(rows, P.dim, P.exact), rhs, P.exact, P.dim)


def project(P: Polyhedron, keep: Sequence[int]) -> Polyhedron:
    """Image of P under the coordinate projection onto `keep`."""
    keep = list(keep)
    if is_empty(P):
        return empty_set(len(keep), P.exact)
    if len(keep) == P.dim:
        return P
    points, rays, lines = generators(P)
    take = lambda vecs: [[v[i] for i in keep] for v in vecs]
    return from_generators(take(points), take(rays), take(lines), len(keep), P.exact)


def canonicalize(P: Polyhedron) -> Polyhedron:
    """Removes redundant halfspaces."""
    if P.empty or P.n_facets == 0:
        return P
    if is_empty(P):
        return empty_set(P.dim, P.exact)
    mat = _h_matrix(P)
    mat.canonicalize()
    conv = Fraction if P.exact else float
    equalities = set(mat.lin_set)
    A, b = [], []
    for i in range(mat.row_size):
        row = [conv(v) for v in mat[i]]
        A.append(row[1:])
        b.append(-row[0])
        if i in equalities:
            A.append([-v for v in row[1:]])
            b.append(row[0])
    return halfspaces(_mat(A, P.dim, P.exact), b, P.exact, P.dim)


def is_upper(P: Polyhedron) -> bool:
    """P + R^n_+ = P, i.e. the recession cone contains the orthant."""
    if is_empty(P):
        return True
    tol = tolerance(P.exact)
    return bool(np.all(P.A >= -tol))


# ===========================
# 🧩 Conditional Polyhedra
# ===========================

@dataclass(frozen=True, eq=False)
class ConditionalPolyhedron:
    """One polyhedron per atom; `coupling` holds rows over the stacked atom blocks, if any."""
    labels: tuple
    pieces: tuple
    coupling: Optional[Polyhedron] = None

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    @property
    def exact(self) -> bool:
        return self.pieces[0].exact

    @property
    def decomposable(self) -> bool:
        return self.coupling is None

    def piece(self, label) -> Polyhedron:
        return self.pieces[self.labels.index(label)]

    def as_dict(self) -> dict:
        out = {_label_key(label): piece.as_dict() for label, piece in zip(self.labels, self.pieces)}
        if self.coupling is not None:
            out["coupling"] = self.coupling.as_dict()
        return out


def _label_key(label) -> str:
    if isinstance(label, tuple):
        return ":".join(str(part) for part in label)
    return str(label)


def assemble(labels: Sequence, pieces: Sequence[Polyhedron],
             coupling: Optional[Polyhedron] = None) -> ConditionalPolyhedron:
    return ConditionalPolyhedron(tuple(labels), tuple(pieces), coupling)


def conditional_whole(labels: Sequence, n: int, exact: bool = False) -> ConditionalPolyhedron:
    return assemble(labels, [whole(n, exact)] * len(labels))


def _same_labels(P: ConditionalPolyhedron, Q: ConditionalPolyhedron):
    if P.labels != Q.labels:
        raise PolyhedronError("conditional polyhedra live on different atoms")


def _require_decomposable(*items: ConditionalPolyhedron):
    if any(item.coupling is not None for item in items):
        raise PolyhedronError("operation needs atomwise (decomposable) sets")


def _merge_coupling(a: Optional[Polyhedron], b: Optional[Polyhedron]) -> Optional[Polyhedron]:
    if a is None:
        return b
    if b is None:
        return a
    return intersect(a, b)


def _map_pieces(P: ConditionalPolyhedron, fn) -> ConditionalPolyhedron:
    _require_decomposable(P)
    return ConditionalPolyhedron(P.labels, tuple(fn(piece, label) for label, piece in zip(P.labels, P.pieces)))


def joint(P: ConditionalPolyhedron) -> Polyhedron:
    """All atoms stacked into a single polyhedron in R^(m * atoms)."""
    m, k = P.dim, len(P.labels)
    n = m * k
    if any(piece.empty for piece in P.pieces):
        return empty_set(n, P.exact)
    rows, rhs = [], []
    for j, piece in enumerate(P.pieces):
        for a, bound in zip(piece.A, piece.b):
            row = [0] * n
            row[j * m:(j + 1) * m] = list(a)
            rows.append(row)
            rhs.append(bound)
    if P.coupling is not None:
        if P.coupling.empty:
            return empty_set(n, P.exact)
        rows += [list(a) for a in P.coupling.A]
        rhs += list(P.coupling.b)
    return halfspaces(_mat(rows, n, P.exact), rhs, P.exact, n)


def project_label(P: ConditionalPolyhedron, label) -> Polyhedron:
    """The component of P on one atom (a projection when atoms are coupled)."""
    j = P.labels.index(label)
    if P.coupling is None:
        if any(is_empty(piece) for piece in P.pieces):
            return empty_set(P.dim, P.exact)
        return P.pieces[j]
    m = P.dim
    return project(joint(P), range(j * m, (j + 1) * m))


def decouple(P: ConditionalPolyhedron) -> ConditionalPolyhedron:
    """Product of the atom components of P."""
    return assemble(P.labels, [project_label(P, label) for label in P.labels])


def _conditional_contains(P: ConditionalPolyhedron, x: Dict, tol: Optional[float]) -> bool:
    if P.coupling is None:
        return all(contains_point(piece, x[label], tol) for label, piece in zip(P.labels, P.pieces))
    stacked = [v for label in P.labels for v in x[label]]
    return contains_point(joint(P), stacked, tol)


def gamma_set(w: Dict, labels: Sequence, exact: bool = False) -> ConditionalPolyhedron:
    """Gamma(w) = {u : w.u >= 0} atomwise in R^d."""
    labels = tuple(labels)
    if all(all(v == 0 for v in w[label]) for label in labels):
        raise PolyhedronError("gamma_set: direction vanishes on every atom (lies in M-perp)")
    pieces = []
    for label in labels:
        vec = list(w[label])
        pieces.append(halfspaces([vec], [0], exact, len(vec)))
    return assemble(labels, pieces)


def restrict_to_eligible(P, m: int):
    """Intersection with M = R^m x {0}, expressed in the R^m coordinates."""
    if isinstance(P, ConditionalPolyhedron):
        return _map_pieces(P, lambda piece, label: restrict_to_eligible(piece, m))
    if P.empty:
        return empty_set(m, P.exact)
    return halfspaces(P.A[:, :m], P.b, P.exact, m)


def scalar_field_multiply(lam: Dict, P: ConditionalPolyhedron) -> ConditionalPolyhedron:
    for label in P.labels:
        if lam[label] < 0:
            raise PolyhedronError(f"negative multiplier {lam[label]} on atom {label}")
    return _map_pieces(P, lambda piece, label: scale(piece, lam[label]))


def halfspace_field(normals: Dict, offsets: Dict, labels: Sequence, m: int,
                    exact: bool = False) -> ConditionalPolyhedron:
    """{u : normal.u >= offset} on each atom (degenerate normals give M or the empty set)."""
    return assemble(labels, [halfspaces([list(normals[l])], [offsets[l]], exact, m) for l in labels])


def sample_points(P: Polyhedron, rng: np.random.Generator, count: int = 20, spread: float = 2.0) -> List[np.ndarray]:
    """Points of an upper polyhedron: LP vertices for random positive objectives, pushed up by noise."""
    if is_empty(P):
        return []
    base = []
    for _ in range(max(1, count // 4)):
        res = lp_min(P, rng.uniform(0.1, 1.0, P.dim))
        if res.optimal:
            base.append(np.asarray(res.x, dtype=float))
    if not base:
        x0 = feasible_point(P)
        base = [np.asarray(x0, dtype=float)]
    points = list(base)
    while len(points) < count:
        x = base[int(rng.integers(len(base)))] + rng.exponential(spread, P.dim)
        points.append(x)
    return points


def from_joint(labels: Sequence, m: int, A, b, exact: bool = False) -> ConditionalPolyhedron:
    """Splits rows over the stacked atom blocks: single-block rows go to that atom, the rest to `coupling`."""
    labels = tuple(labels)
    k = len(labels)
    n = m * k
    A = np.asarray(A, dtype=object if exact else float).reshape(-1, n)
    b = np.asarray(b, dtype=object if exact else float).reshape(-1)
    tol = tolerance(exact)
    zero = 0 if exact else 1e-12
    local = [([], []) for _ in labels]
    mixed_rows, mixed_rhs = [], []
    for row, bound in zip(A, b):
        blocks = [j for j in range(k) if any(abs(v) > zero for v in row[j * m:(j + 1) * m])]
        if not blocks:
            if bound > tol:
                return assemble(labels, [empty_set(m, exact)] * k)
            continue
        if len(blocks) == 1:
            j = blocks[0]
            local[j][0].append(row[j * m:(j + 1) * m])
            local[j][1].append(bound)
        else:
            mixed_rows.append(row)
            mixed_rhs.append(bound)
    pieces = [halfspaces(_mat(rows, m, exact), rhs, exact, m) for rows, rhs in local]
    coupling = halfspaces(_mat(mixed_rows, n, exact), mixed_rhs, exact, n) if mixed_rows else None
    return assemble(labels, pieces, coupling)


def restrict_labels(P: ConditionalPolyhedron, keep: Sequence) -> ConditionalPolyhedron:
    """The components of P on a subset of its atoms (a projection of the joint set)."""
    keep = tuple(keep)
    m = P.dim
    if P.coupling is None:
        if any(is_empty(piece) for piece in P.pieces):
            return assemble(keep, [empty_set(m, P.exact)] * len(keep))
        return assemble(keep, [P.piece(label) for label in keep])
    cols = [P.labels.index(label) * m + i for label in keep for i in range(m)]
    image = project(joint(P), cols)
    if image.empty:
        return assemble(keep, [empty_set(m, P.exact)] * len(keep))
    return from_joint(keep, m, image.A, image.b, P.exact)


def product(parts: Sequence[ConditionalPolyhedron]) -> ConditionalPolyhedron:
    """Cartesian product of conditional polyhedra living on disjoint atoms."""
    labels = tuple(label for part in parts for label in part.labels)
    m, exact = parts[0].dim, parts[0].exact
    if all(part.coupling is None for part in parts):
        return assemble(labels, [piece for part in parts for piece in part.pieces])
    n = m * len(labels)
    rows, rhs, offset = [], [], 0
    for part in parts:
        width = m * len(part.labels)
        block = joint(part)
        if block.empty:
            return assemble(labels, [empty_set(m, exact)] * len(labels))
        for a, bound in zip(block.A, block.b):
            row = [0] * n
            row[offset:offset + width] = list(a)
            rows.append(row)
            rhs.append(bound)
        offset += width
    return from_joint(labels, m, _mat(rows, n, exact), rhs, exact)
