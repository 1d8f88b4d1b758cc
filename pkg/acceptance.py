import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import lp_backend
import polyhedra
from lp_backend import LPResult
from polyhedra import ConditionalPolyhedron
from space import Atom, OptionalSpace, ScenarioSpace, draw, num_array, to_number, zeros

# ===========================
# 🔧 Configuration
# ===========================
FAMILIES = ("worst_case", "shifted", "expectation", "cone", "generators", "intersection")

logger = logging.getLogger("Acceptance")


class AcceptanceError(ValueError):
    """An acceptance-set description that does not fit the scenario tree."""


# ===========================
# 🧱 Cell Layout
# ===========================

@dataclass(frozen=True, eq=False)
class CellLayout:
    """Coordinates (r, a, i): F_r-atom a at time r, asset i. Processes and optional vectors share them."""
    space: ScenarioSpace
    d: int

    @cached_property
    def cells(self) -> tuple:
        return tuple((r, a) for r in self.space.times for a in range(len(self.space.partitions[r])))

    @cached_property
    def index(self) -> Dict[tuple, int]:
        return {cell: k for k, cell in enumerate(self.cells)}

    @property
    def exact(self) -> bool:
        return self.space.exact

    @property
    def n_coords(self) -> int:
        return len(self.cells) * self.d

    def coord(self, r: int, a: int, i: int) -> int:
        return self.index[(r, a)] * self.d + i

    def row_coords(self, rows: Sequence[int]) -> List[int]:
        rows = set(rows)
        return [self.coord(r, a, i) for (r, a) in self.cells if r in rows for i in range(self.d)]

    def flatten(self, X) -> np.ndarray:
        X = num_array(X, self.exact) if self.exact else np.asarray(X, dtype=float)
        out = zeros(self.n_coords, self.exact)
        for k, (r, a) in enumerate(self.cells):
            out[k * self.d:(k + 1) * self.d] = X[r, self.space.rep(r, a)]
        return out

    def unflatten(self, x) -> np.ndarray:
        space = self.space
        out = zeros((space.horizon + 1, space.n_states, self.d), self.exact)
        for k, (r, a) in enumerate(self.cells):
            out[r, space.members(r, a)] = x[k * self.d:(k + 1) * self.d]
        return out

    def label_cells(self, label: Atom) -> List[tuple]:
        if label.kind == "past":
            return [(label.time, label.index)]
        space = self.space
        return [(r, b) for r in range(label.time, space.horizon + 1)
                for b in space.descendants(label.time, label.index, r)]

    def shift_matrix(self, labels: Sequence[Atom], m: int) -> np.ndarray:
        """Maps stacked per-atom capital (m entries per atom) to the coordinates it is added to."""
        out = zeros((self.n_coords, m * len(labels)), self.exact)
        for j, label in enumerate(labels):
            for (r, b) in self.label_cells(label):
                for i in range(m):
                    out[self.coord(r, b, i), j * m + i] = 1
        return out

    def capital_field(self, labels: Sequence[Atom], values: Dict[Atom, Sequence], m: int) -> np.ndarray:
        """The position m 1_(atom cells) for per-atom capital vectors in R^m."""
        space = self.space
        out = zeros((space.horizon + 1, space.n_states, self.d), self.exact)
        for label in labels:
            vec = [to_number(v, self.exact) for v in values[label]]
            for (r, b) in self.label_cells(label):
                out[r, space.members(r, b), :m] = vec
        return out


def value_on(space: ScenarioSpace, field, label: Atom):
    """Value of an adapted field on an atom (row `label.time`, any member state)."""
    return field[label.time, space.rep(label.time, label.index)]


def row_field(space: ScenarioSpace, Z, r: int) -> np.ndarray:
    """Z 1_r: the F_r-measurable (N, d) field Z placed on row r."""
    Z = np.asarray(Z)
    out = zeros((space.horizon + 1, space.n_states, Z.shape[-1]), space.exact)
    out[r] = Z
    return out


def tail_field(X, s: int) -> np.ndarray:
    """X 1_(T_s): rows before s cleared."""
    out = np.array(X, copy=True)
    out[:s] = 0
    return out


# ===========================
# ✅ Acceptance Sets
# ===========================

@dataclass(frozen=True, eq=False)
class AcceptanceSet:
    """{X : G x >= h} over the flattened coordinates of a position."""
    layout: CellLayout
    G: np.ndarray
    h: np.ndarray
    time: int
    name: str = "custom"

    kind = "vector"

    def __post_init__(self):
        allowed = set(self.layout.row_coords(self.support_rows()))
        for col in range(self.layout.n_coords):
            if col in allowed:
                continue
            if self.G.shape[0] and any(v != 0 for v in self.G[:, col]):
                raise AcceptanceError(f"{self.kind} acceptance set at time {self.time} constrains coordinate "
                                      f"{col} outside its rows {list(self.support_rows())}")

    @property
    def space(self) -> ScenarioSpace:
        return self.layout.space

    @property
    def exact(self) -> bool:
        return self.layout.exact

    @property
    def d(self) -> int:
        return self.layout.d

    def labels(self) -> tuple:
        return OptionalSpace(self.space).labels(self.time)

    def support_rows(self) -> range:
        return self.space.times

    @property
    def is_cone(self) -> bool:
        tol = polyhedra.tolerance(self.exact)
        return all(abs(v) <= tol for v in self.h)

    def polyhedron(self) -> polyhedra.Polyhedron:
        return polyhedra.halfspaces(self.G, self.h, self.exact, self.layout.n_coords)

    def contains(self, X, tol: Optional[float] = None) -> bool:
        tol = polyhedra.tolerance(self.exact) if tol is None else tol
        if self.G.shape[0] == 0:
            return True
        x = self.layout.flatten(X)
        return bool(np.all(self.G.dot(x) >= self.h - tol))

    def evaluate(self, X, m: int) -> ConditionalPolyhedron:
        """{capital in M : X + capital 1_(atom cells) in the set}, one block per atom."""
        labels = self.labels()
        x = self.layout.flatten(X)
        if self.G.shape[0] == 0:
            return polyhedra.conditional_whole(labels, m, self.exact)
        L = self.layout.shift_matrix(labels, m)
        return polyhedra.from_joint(labels, m, self.G.dot(L), self.h - self.G.dot(x), self.exact)

    def infimum(self, c) -> LPResult:
        """inf of c.x over the set."""
        return lp_backend.minimize(c, self.G, self.h, exact=self.exact)

    def random_position(self, rng: np.random.Generator, low: float = -3.0, high: float = 3.0) -> np.ndarray:
        space = self.space
        out = zeros((space.horizon + 1, space.n_states, self.d), self.exact)
        for r in self.support_rows():
            for a in range(len(space.partitions[r])):
                out[r, space.members(r, a)] = draw(rng, low, high, self.d, self.exact)
        return out

    def describe(self) -> dict:
        return {"kind": self.kind, "time": self.time, "name": self.name,
                "constraints": int(self.G.shape[0]), "cone": self.is_cone}


@dataclass(frozen=True, eq=False)
class ProcessAcceptanceSet(AcceptanceSet):
    """A_t over processes living on T_t; one capital block per F_t-atom."""
    kind = "process"

    def labels(self) -> tuple:
        return self.space.future_labels(self.time)

    def support_rows(self) -> range:
        return range(self.time, self.space.horizon + 1)


@dataclass(frozen=True, eq=False)
class RestrictedAcceptanceSet(AcceptanceSet):
    """A_(R_s) over F_s-measurable vectors placed on row s; `horizon` is the t of R_s^t."""
    horizon: Optional[int] = None

    kind = "restricted"

    def labels(self) -> tuple:
        return self.space.past_labels(self.time)

    def support_rows(self) -> range:
        return range(self.time, self.time + 1)


@dataclass(frozen=True, eq=False)
class VectorAcceptanceSet(AcceptanceSet):
    """A-bar_t over the optional space; `parts` caches the time-decomposed pieces when known."""
    parts: Optional[tuple] = None

    kind = "vector"

    @property
    def decomposable(self) -> bool:
        return self.parts is not None


def _rebuild(acc: AcceptanceSet, G, h, name: str) -> AcceptanceSet:
    if isinstance(acc, RestrictedAcceptanceSet):
        return RestrictedAcceptanceSet(acc.layout, G, h, acc.time, name, horizon=acc.horizon)
    if isinstance(acc, VectorAcceptanceSet):
        return VectorAcceptanceSet(acc.layout, G, h, acc.time, name)
    return type(acc)(acc.layout, G, h, acc.time, name)


def intersect(acc: AcceptanceSet, other: AcceptanceSet) -> AcceptanceSet:
    if type(acc) is not type(other) or acc.time != other.time:
        raise AcceptanceError("only acceptance sets of the same kind and time can be intersected")
    G = np.vstack([acc.G, other.G])
    h = np.concatenate([acc.h, other.h])
    return _rebuild(acc, G, h, f"{acc.name}&{other.name}")


def empty_rows(layout: CellLayout) -> Tuple[np.ndarray, np.ndarray]:
    """A single infeasible row 0 >= 1."""
    return zeros((1, layout.n_coords), layout.exact), num_array([1], layout.exact)


# ===========================
# 🏭 Named Families
# ===========================

def _per_asset(value, d: int, exact: bool, path: str) -> list:
    if isinstance(value, (list, tuple)):
        if len(value) != d:
            raise AcceptanceError(f"{path}: expected {d} entries, got {len(value)}")
        return [to_number(v, exact) for v in value]
    return [to_number(value, exact)] * d


def family_rows(spec: dict, layout: CellLayout, rows: Sequence[int], anchor: int, path: str) -> Tuple[list, list]:
    """Constraint rows of a named family on the given time rows."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise AcceptanceError(f"{path}: expected an object with a 'family' key")
    family = spec["family"]
    space, d, exact = layout.space, layout.d, layout.exact
    G, h = [], []

    def unit(r, a, coefs):
        row = [to_number(0, exact)] * layout.n_coords
        for i, c in coefs:
            row[layout.coord(r, a, i)] = to_number(c, exact)
        return row

    if family in ("worst_case", "shifted"):
        shift = _per_asset(spec.get("shift", 0) if family == "shifted" else 0, d, exact, f"{path}.shift")
        for r in rows:
            for a in range(len(space.partitions[r])):
                for i in range(d):
                    G.append(unit(r, a, [(i, 1)]))
                    h.append(shift[i])
    elif family == "expectation":
        shift = _per_asset(spec.get("shift", 0), d, exact, f"{path}.shift")
        for a in range(len(space.partitions[anchor])):
            total = space.atom_prob(anchor, a)
            for r in rows:
                for i in range(d):
                    row = [to_number(0, exact)] * layout.n_coords
                    for b in space.descendants(anchor, a, r):
                        row[layout.coord(r, b, i)] = space.atom_prob(r, b) / total
                    G.append(row)
                    h.append(shift[i])
    elif family == "cone":
        normals = spec.get("normals")
        if not normals:
            raise AcceptanceError(f"{path}.normals: a cone needs at least one normal")
        for k, normal in enumerate(normals):
            if len(normal) != d:
                raise AcceptanceError(f"{path}.normals[{k}]: expected {d} entries, got {len(normal)}")
        for r in rows:
            for a in range(len(space.partitions[r])):
                for normal in normals:
                    G.append(unit(r, a, list(enumerate(normal))))
                    h.append(to_number(0, exact))
    elif family == "generators":
        index = {name: k for k, name in enumerate(space.states)}
        for k, item in enumerate(spec.get("rows", [])):
            row = [to_number(0, exact)] * layout.n_coords
            for j, term in enumerate(item.get("terms", [])):
                where = f"{path}.rows[{k}].terms[{j}]"
                if len(term) != 4:
                    raise AcceptanceError(f"{where}: expected [time, state, asset, coef]")
                time, state, asset, coef = term
                if time not in rows:
                    raise AcceptanceError(f"{where}: time {time} outside rows {list(rows)}")
                if state not in index:
                    raise AcceptanceError(f"{where}: unknown state {state!r}")
                if not (0 <= asset < d):
                    raise AcceptanceError(f"{where}: asset {asset} outside 0..{d - 1}")
                a = int(space.atom_of[time, index[state]])
                row[layout.coord(time, a, asset)] += to_number(coef, exact)
            G.append(row)
            h.append(to_number(item.get("rhs", 0), exact))
    elif family == "intersection":
        members = spec.get("members", [])
        if not members:
            raise AcceptanceError(f"{path}.members: an intersection needs at least one member")
        for k, member in enumerate(members):
            g, b = family_rows(member, layout, rows, anchor, f"{path}.members[{k}]")
            G.extend(g)
            h.extend(b)
    else:
        raise AcceptanceError(f"{path}.family: unknown family {family!r} (known: {', '.join(FAMILIES)})")
    return G, h


def _matrices(layout: CellLayout, G: list, h: list) -> Tuple[np.ndarray, np.ndarray]:
    if not G:
        return zeros((0, layout.n_coords), layout.exact), zeros(0, layout.exact)
    return num_array(G, layout.exact).reshape(-1, layout.n_coords), num_array(h, layout.exact)


def process_acceptance(layout: CellLayout, t: int, spec: dict, path: str = "risk.process") -> ProcessAcceptanceSet:
    rows = range(t, layout.space.horizon + 1)
    G, h = _matrices(layout, *family_rows(spec, layout, rows, t, path))
    return ProcessAcceptanceSet(layout, G, h, t, spec["family"])


def restricted_acceptance(layout: CellLayout, s: int, spec: dict, horizon: Optional[int] = None,
                          path: str = "risk.restricted") -> RestrictedAcceptanceSet:
    G, h = _matrices(layout, *family_rows(spec, layout, [s], s, path))
    return RestrictedAcceptanceSet(layout, G, h, s, spec["family"], horizon=horizon)


def vector_acceptance(layout: CellLayout, t: int, spec: dict, path: str = "risk.vector") -> VectorAcceptanceSet:
    """An optional-space acceptance set given directly (not assembled from process and restricted parts)."""
    if spec.get("family") == "expectation":
        raise AcceptanceError(f"{path}.family: expectation is defined for processes and restricted sets")
    G, h = _matrices(layout, *family_rows(spec, layout, list(layout.space.times), t, path))
    return VectorAcceptanceSet(layout, G, h, t, spec["family"])
