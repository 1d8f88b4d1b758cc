import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

# ===========================
# 🔧 Configuration
# ===========================
ARITH_TOL = 1e-9
ZERO_TOL = 1e-12

logger = logging.getLogger("Space")


class SpaceError(ValueError):
    """Raised when a scenario tree or a measure on it breaks its invariants."""


class Atom(NamedTuple):
    """An atom of F_t ("future", t, a) = D_a x T_t, or a realized cell ("past", r, a) = D_a x {r}."""
    kind: str
    time: int
    index: int


# ===========================
# 🔢 Number Helpers
# ===========================

def to_number(value, exact: bool):
    if exact:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, (float, np.floating)):
            return Fraction(str(float(value)))
        if isinstance(value, (int, np.integer)):
            return Fraction(int(value))
        return Fraction(str(value))
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def num_array(values, exact: bool) -> np.ndarray:
    if not exact:
        return np.asarray(values, dtype=float)
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_number(v, True)
    return out


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        return np.full(shape, Fraction(0), dtype=object)
    return np.zeros(shape, dtype=float)


def ones(shape, exact: bool) -> np.ndarray:
    if exact:
        return np.full(shape, Fraction(1), dtype=object)
    return np.ones(shape, dtype=float)


def positive(values, exact: bool) -> np.ndarray:
    values = np.asarray(values)
    if exact:
        return values > 0
    return values > ZERO_TOL


def ratio(num, den, fallback, exact: bool) -> np.ndarray:
    """Elementwise num/den where den is positive, fallback elsewhere."""
    num = np.asarray(num)
    den = np.asarray(den)
    num, den = np.broadcast_arrays(num, den)
    out = np.empty(num.shape, dtype=object if exact else float)
    out[...] = to_number(fallback, exact)
    mask = positive(den, exact)
    out[mask] = num[mask] / den[mask]
    return out


def draw(rng: np.random.Generator, low: float, high: float, size, exact: bool) -> np.ndarray:
    if exact:
        ticks = rng.integers(int(round(low * 20)), int(round(high * 20)) + 1, size=size)
        return num_array(np.vectorize(lambda k: Fraction(int(k), 20), otypes=[object])(ticks), True)
    return rng.uniform(low, high, size=size)


def close(a, b, exact: bool, tol: float = ARITH_TOL) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    if exact:
        return bool(np.all(a == b))
    return bool(np.all(np.abs(a.astype(float) - b.astype(float)) <= tol))


# ===========================
# 🌳 Scenario Space
# ===========================

@dataclass(frozen=True, eq=False)
class ScenarioSpace:
    states: tuple
    horizon: int
    partitions: tuple
    prob: np.ndarray
    mu: np.ndarray
    exact: bool = False

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def times(self) -> range:
        return range(self.horizon + 1)

    @cached_property
    def atom_of(self) -> np.ndarray:
        table = np.zeros((self.horizon + 1, self.n_states), dtype=int)
        for t, atoms in enumerate(self.partitions):
            for a, members in enumerate(atoms):
                table[t, list(members)] = a
        return table

    def atoms(self, t: int) -> tuple:
        return self.partitions[t]

    def members(self, t: int, a: int) -> np.ndarray:
        return np.asarray(self.partitions[t][a], dtype=int)

    def rep(self, t: int, a: int) -> int:
        return self.partitions[t][a][0]

    def atom_prob(self, t: int, a: int):
        return self.prob[self.members(t, a)].sum()

    def ancestor(self, s: int, a: int, t: int) -> int:
        """Index of the F_t-atom containing atom a of F_s (t <= s)."""
        return int(self.atom_of[t, self.rep(s, a)])

    def descendants(self, t: int, a: int, s: int) -> List[int]:
        """Indices of the F_s-atoms inside atom a of F_t (s >= t)."""
        return [b for b in range(len(self.partitions[s])) if self.ancestor(s, b, t) == a]

    def future_labels(self, t: int) -> tuple:
        return tuple(Atom("future", t, a) for a in range(len(self.partitions[t])))

    def past_labels(self, r: int) -> tuple:
        return tuple(Atom("past", r, a) for a in range(len(self.partitions[r])))

    def mu_before(self, t: int) -> np.ndarray:
        """Sum of mu_r over r < t, per state."""
        if t == 0:
            return zeros(self.n_states, self.exact)
        return self.mu[:t].sum(axis=0)


def validate_space_data(states: Sequence[str], horizon: int, partitions: Sequence, prob, mu=None) -> List[str]:
    """Collects every invariant violation instead of stopping at the first one."""
    errors = []
    names = list(states)
    if len(set(names)) != len(names):
        errors.append("space.states: duplicate state names")
    if not isinstance(horizon, int) or horizon < 1:
        errors.append(f"space.horizon: must be an integer >= 1, got {horizon!r}")
        return errors
    if len(partitions) != horizon + 1:
        errors.append(f"space.partitions: expected {horizon + 1} partitions, got {len(partitions)}")
        return errors

    known = set(names)
    for t, atoms in enumerate(partitions):
        seen = []
        for a, atom in enumerate(atoms):
            for name in atom:
                if name not in known:
                    errors.append(f"space.partitions[{t}][{a}]: unknown state {name!r}")
            seen.extend(atom)
        if sorted(seen) != sorted(names):
            errors.append(f"space.partitions[{t}]: atoms do not partition the states exactly once")
    if errors:
        return errors

    if len(partitions[0]) != 1:
        errors.append("space.partitions[0]: F_0 must be trivial (a single atom)")
    if any(len(atom) != 1 for atom in partitions[horizon]):
        errors.append(f"space.partitions[{horizon}]: F_T must consist of singletons")
    for t in range(horizon):
        parents = {name: a for a, atom in enumerate(partitions[t]) for name in atom}
        for b, atom in enumerate(partitions[t + 1]):
            owners = {parents[name] for name in atom}
            if len(owners) > 1:
                errors.append(
                    f"space.partitions[{t + 1}][{b}]: atom {list(atom)} is not contained in one "
                    f"F_{t}-atom (spans atoms {sorted(owners)})"
                )

    weights = [prob[name] for name in names] if isinstance(prob, dict) else list(prob)
    if len(weights) != len(names):
        errors.append("space.prob: one weight per state required")
    else:
        values = [float(Fraction(str(w))) for w in weights]
        if any(v <= 0 for v in values):
            errors.append("space.prob: every weight must be > 0 (full support)")
        if abs(sum(values) - 1.0) > ARITH_TOL:
            errors.append(f"space.prob: weights sum to {sum(values):.12g}, expected 1")

    if mu is not None:
        if len(mu) != horizon + 1:
            errors.append(f"space.mu: expected {horizon + 1} rows, got {len(mu)}")
            return errors
        rows = [[float(Fraction(str(row[name] if isinstance(row, dict) else row[i])))
                 for i, name in enumerate(names)] for row in mu]
        for i, name in enumerate(names):
            total = sum(rows[t][i] for t in range(horizon + 1))
            if abs(total - 1.0) > ARITH_TOL:
                errors.append(f"space.mu: weights of state {name!r} sum to {total:.12g}, expected 1")
            if min(rows[t][i] for t in range(horizon + 1)) <= 0:
                errors.append(f"space.mu: weights of state {name!r} must be > 0")
        for t, atoms in enumerate(partitions):
            for a, atom in enumerate(atoms):
                vals = {rows[t][names.index(name)] for name in atom}
                if max(vals) - min(vals) > ARITH_TOL:
                    errors.append(f"space.mu[{t}]: not constant on F_{t}-atom {list(atom)} (mu must be adapted)")
    return errors


def build_space(states: Sequence[str], horizon: int, partitions: Sequence, prob, mu=None,
                exact: bool = False) -> ScenarioSpace:
    errors = validate_space_data(states, horizon, partitions, prob, mu)
    if errors:
        raise SpaceError("; ".join(errors))

    names = list(states)
    index = {name: i for i, name in enumerate(names)}
    parts = tuple(
        tuple(tuple(sorted(index[name] for name in atom)) for atom in atoms)
        for atoms in partitions
    )
    weights = [prob[name] for name in names] if isinstance(prob, dict) else list(prob)
    p = num_array([to_number(w, exact) for w in weights], exact)
    if mu is None:
        mu_arr = zeros((horizon + 1, len(names)), exact) + to_number(Fraction(1, horizon + 1), exact)
    else:
        mu_arr = num_array([
            [to_number(row[name] if isinstance(row, dict) else row[i], exact) for i, name in enumerate(names)]
            for row in mu
        ], exact)
    space = ScenarioSpace(tuple(names), horizon, parts, p, mu_arr, exact)
    logger.debug(f"Built scenario space: {len(names)} states, T={horizon}")
    return space


def is_measurable(space: ScenarioSpace, values, t: int, exact: Optional[bool] = None) -> bool:
    values = np.asarray(values)
    exact = space.exact if exact is None else exact
    for a in range(len(space.partitions[t])):
        block = values[space.members(t, a)]
        if not close(block, np.broadcast_to(block[0], block.shape), exact):
            return False
    return True


# ===========================
# 📐 Conditional Expectations
# ===========================

def _blank(values: np.ndarray, exact: bool) -> np.ndarray:
    return np.empty(values.shape, dtype=object if exact or values.dtype == object else float)


def cond_exp(space: ScenarioSpace, values, t: int) -> np.ndarray:
    """P-conditional expectation given F_t, returned per state (first axis = states)."""
    values = np.asarray(values)
    out = _blank(values, space.exact)
    for a in range(len(space.partitions[t])):
        idx = space.members(t, a)
        p = space.prob[idx]
        block = values[idx]
        weights = p.reshape((-1,) + (1,) * (block.ndim - 1))
        out[idx] = (weights * block).sum(axis=0) / p.sum()
    return out


def _check_times(space: ScenarioSpace, t: int, s: int):
    if not (0 <= t <= s <= space.horizon):
        raise SpaceError(f"time indices out of range: t={t}, s={s}, T={space.horizon}")


def xi(space: ScenarioSpace, density, t: int, s: int) -> np.ndarray:
    """Density ratio E_s[dQ/dP] / E_t[dQ/dP], and 1 where the denominator vanishes."""
    _check_times(space, t, s)
    density = np.asarray(density)
    if t == s:
        return ones(space.n_states, space.exact)
    return ratio(cond_exp(space, density, s), cond_exp(space, density, t), 1, space.exact)


def cond_expectation(space: ScenarioSpace, X, Q, t: int) -> np.ndarray:
    """E^Q_t[X] = E_t[xi_{t,T}(Q) X]; X is (N,) or (N, d), Q is (N,) or (d, N)."""
    _check_times(space, t, space.horizon)
    X = np.asarray(X)
    Q = np.asarray(Q)
    if X.ndim == 1:
        density = Q if Q.ndim == 1 else Q[0]
        return cond_exp(space, xi(space, density, t, space.horizon) * X, t)
    Q = np.atleast_2d(Q)
    cols = [cond_exp(space, xi(space, Q[i], t, space.horizon) * X[:, i], t) for i in range(X.shape[1])]
    return np.stack(cols, axis=1)


def w_map(space: ScenarioSpace, Q, w, t: int, s: int) -> np.ndarray:
    """w_t^s(Q, w) = diag(w) xi_{t,s}(Q), componentwise; w is (N, d), Q is (d, N)."""
    _check_times(space, t, s)
    w = np.asarray(w)
    if t == s:
        return w.copy()
    Q = np.atleast_2d(np.asarray(Q))
    factors = np.stack([xi(space, Q[i], t, s) for i in range(w.shape[1])], axis=1)
    return w * factors


def expectation_weights(space: ScenarioSpace, density, t: int, a: int) -> np.ndarray:
    """Per-state weights with E^Q_t[Y] on atom a equal to sum(weights * Y)."""
    weights = zeros(space.n_states, space.exact)
    idx = space.members(t, a)
    factor = xi(space, density, t, space.horizon)
    weights[idx] = space.prob[idx] * factor[idx] / space.prob[idx].sum()
    return weights


def validate_density(space: ScenarioSpace, density, tol: float = ARITH_TOL):
    density = np.asarray(density)
    if density.shape != (space.n_states,):
        raise SpaceError(f"density must have one entry per state, got shape {density.shape}")
    if np.any(density < (0 if space.exact else -tol)):
        raise SpaceError("density must be nonnegative")
    total = (space.prob * density).sum()
    if not close(total, 1, space.exact, tol):
        raise SpaceError(f"density must have P-expectation 1, got {float(total):.12g}")


# ===========================
# ⏱️ Optional Space
# ===========================

@dataclass(frozen=True, eq=False)
class OptionalSpace:
    """Omega x {0..T} with the optional filtration; cells are (F_r-atom, r)."""
    base: ScenarioSpace

    def labels(self, t: int) -> tuple:
        past = tuple(label for r in range(t) for label in self.base.past_labels(r))
        return past + self.base.future_labels(t)

    def cell_mass(self) -> np.ndarray:
        """P-bar mass carried by each (time, state) pair."""
        return self.base.mu * self.base.prob[None, :]

    def expectation(self, X) -> object:
        """E-bar[X] = E[sum_t mu_t X_t] for X of shape (T+1, N) or (T+1, N, d)."""
        X = np.asarray(X)
        mass = self.cell_mass()
        mass = mass.reshape(mass.shape + (1,) * (X.ndim - 2))
        return (mass * X).sum(axis=(0, 1))


def lift_space(space: ScenarioSpace) -> OptionalSpace:
    return OptionalSpace(space)


def label_states(space: ScenarioSpace, label: Atom) -> np.ndarray:
    return space.members(label.time, label.index)


def label_rows(space: ScenarioSpace, label: Atom) -> range:
    if label.kind == "past":
        return range(label.time, label.time + 1)
    return range(label.time, space.horizon + 1)


@dataclass(frozen=True, eq=False)
class OptionalMeasure:
    """Q-bar = Q (x) psi with psi stored in its normal form."""
    space: ScenarioSpace
    q: np.ndarray
    psi: np.ndarray

    def masses(self) -> np.ndarray:
        return self.space.prob[None, :] * self.q[None, :] * self.psi

    def density(self) -> np.ndarray:
        """dQ-bar/dP-bar per (time, state), constant on F_r-atoms along row r."""
        space = self.space
        masses = self.masses()
        out = zeros(masses.shape, space.exact)
        for r in space.times:
            for a in range(len(space.partitions[r])):
                idx = space.members(r, a)
                out[r, idx] = masses[r, idx].sum() / (space.prob[idx] * space.mu[r, idx]).sum()
        return out

    def consumed_before(self, t: int) -> np.ndarray:
        if t == 0:
            return zeros(self.space.n_states, self.space.exact)
        return self.psi[:t].sum(axis=0)


def _validate_weights(space: ScenarioSpace, weights: np.ndarray, tol: float):
    if weights.shape != (space.horizon + 1, space.n_states):
        raise SpaceError(f"optional weights must have shape (T+1, N), got {weights.shape}")
    if np.any(weights < (0 if space.exact else -tol)):
        raise SpaceError("optional weights must be nonnegative")
    if not close(weights.sum(), 1, space.exact, tol):
        raise SpaceError(f"optional weights must sum to 1, got {float(weights.sum()):.12g}")


def decompose(opt: OptionalSpace, weights, tol: float = ARITH_TOL) -> OptionalMeasure:
    """Splits a measure on the optional space into (Q, psi-hat).

    Raw weights live on (time, state) pairs; only their totals on the cells
    D x {r} (D an F_r-atom) matter, so non-adapted input is aggregated first.
    Where psi is exhausted the continuation of Q is taken equal to P, and on
    {tau(Q) <= t} psi is replaced by the mu-proportional normal form.
    """
    space = opt.base
    exact = space.exact
    weights = num_array(weights, exact)
    _validate_weights(space, weights, tol)
    T, N = space.horizon, space.n_states

    flow = zeros((T + 1, N), exact)
    for r in space.times:
        for a in range(len(space.partitions[r])):
            idx = space.members(r, a)
            flow[r, idx] = weights[r, idx].sum() / space.prob[idx].sum()
    remaining_flow = zeros((T + 1, N), exact)
    for r in space.times:
        remaining_flow[r] = cond_exp(space, flow[r:].sum(axis=0), r)

    D = ones(N, exact)
    S = zeros(N, exact)
    psi = zeros((T + 1, N), exact)
    stopped = np.zeros(N, dtype=bool)
    S_tau = zeros(N, exact)
    M_tau = zeros(N, exact)
    for r in space.times:
        newly = ~stopped & ~positive(D, exact)
        S_tau[newly] = S[newly]
        M_tau[newly] = space.mu_before(r)[newly]
        stopped |= newly

        left = 1 - S
        live = ~stopped & positive(left, exact)
        exhausted = ~stopped & ~positive(left, exact)
        row = zeros(N, exact)
        row[stopped] = space.mu[r, stopped] * (1 - S_tau[stopped]) / (1 - M_tau[stopped])
        row[live] = flow[r, live] * left[live] / remaining_flow[r, live]
        row[exhausted] = 0
        psi[r] = row
        S = S + row

        if r < T:
            nxt = zeros(N, exact)
            left = 1 - S
            cont = ~stopped & positive(left, exact)
            nxt[cont] = remaining_flow[r + 1, cont] / left[cont]
            frozen = ~stopped & ~positive(left, exact)
            nxt[frozen] = D[frozen]
            D = nxt
    return OptionalMeasure(space, D, psi)


def validate_psi(space: ScenarioSpace, psi, tol: float = ARITH_TOL):
    psi = np.asarray(psi)
    if psi.shape != (space.horizon + 1, space.n_states):
        raise SpaceError(f"psi must have shape (T+1, N), got {psi.shape}")
    if np.any(psi < (0 if space.exact else -tol)):
        raise SpaceError("psi must be nonnegative")
    if not close(psi.sum(axis=0), ones(space.n_states, space.exact), space.exact, tol):
        raise SpaceError("psi rows must sum to 1 on every state")
    for r in space.times:
        if not is_measurable(space, psi[r], r):
            raise SpaceError(f"psi_{r} is not F_{r}-measurable")


def compose(space: ScenarioSpace, q, psi, tol: float = ARITH_TOL) -> OptionalMeasure:
    """Q (x) psi, returned in normal form."""
    q = num_array(q, space.exact)
    psi = num_array(psi, space.exact)
    validate_density(space, q, tol)
    validate_psi(space, psi, tol)
    weights = space.prob[None, :] * q[None, :] * psi
    return decompose(lift_space(space), weights, tol)


def reference_measure(space: ScenarioSpace) -> OptionalMeasure:
    """P-bar = P (x) mu."""
    return OptionalMeasure(space, ones(space.n_states, space.exact), space.mu.copy())


def stopping_time(space: ScenarioSpace, q) -> np.ndarray:
    """tau(Q) per state: first t with E_t[dQ/dP] = 0, T+1 if never."""
    tau = np.full(space.n_states, space.horizon + 1, dtype=int)
    for t in reversed(space.times):
        hit = ~positive(cond_exp(space, q, t), space.exact)
        tau[hit] = t
    return tau


def is_Mt_preserving(opt: OptionalSpace, Qbar: OptionalMeasure, t: int, tol: float = ARITH_TOL) -> bool:
    space = opt.base
    if not close(cond_exp(space, Qbar.q, t), ones(space.n_states, space.exact), space.exact, tol):
        return False
    return all(close(Qbar.psi[s], space.mu[s], space.exact, tol) for s in range(t))


def bar_expectation_weights(opt: OptionalSpace, Qbar: OptionalMeasure, t: int, label: Atom) -> np.ndarray:
    """Per-(time, state) weights with E-bar^Q-bar_t[X] on the label equal to sum(weights * X)."""
    space = opt.base
    exact = space.exact
    weights = zeros((space.horizon + 1, space.n_states), exact)
    idx = label_states(space, label)
    if label.kind == "past":
        weights[label.time, idx] = space.prob[idx] / space.prob[idx].sum()
        return weights

    rep = idx[0]
    left = 1 - Qbar.consumed_before(t)[rep]
    if positive(left, exact):
        factor = xi(space, Qbar.q, t, space.horizon)
        base = space.prob[idx] * factor[idx] / (space.prob[idx].sum() * left)
        for s in range(t, space.horizon + 1):
            weights[s, idx] = base * Qbar.psi[s, idx]
    else:
        base = space.prob[idx] / (space.prob[idx].sum() * (1 - space.mu_before(t)[rep]))
        for s in range(t, space.horizon + 1):
            weights[s, idx] = base * space.mu[s, idx]
    return weights


def bar_cond_expectation(opt: OptionalSpace, X, Qbar, t: int) -> np.ndarray:
    """E-bar^Q-bar_t[X] as an F-bar_t-measurable field of shape like X.

    X is (T+1, N) with a single OptionalMeasure, or (T+1, N, d) with one
    measure per component.
    """
    space = opt.base
    X = num_array(X, space.exact) if space.exact else np.asarray(X, dtype=float)
    if X.ndim == 2:
        return _bar_cond_scalar(opt, X, Qbar, t)
    measures = list(Qbar) if isinstance(Qbar, (list, tuple)) else [Qbar] * X.shape[2]
    cols = [_bar_cond_scalar(opt, X[:, :, i], measures[i], t) for i in range(X.shape[2])]
    return np.stack(cols, axis=2)


def _bar_cond_scalar(opt: OptionalSpace, X: np.ndarray, Qbar: OptionalMeasure, t: int) -> np.ndarray:
    space = opt.base
    out = X.copy()
    for label in space.future_labels(t):
        value = (bar_expectation_weights(opt, Qbar, t, label) * X).sum()
        idx = label_states(space, label)
        for s in range(t, space.horizon + 1):
            out[s, idx] = value
    return out


def xi_bar(opt: OptionalSpace, Qbar: OptionalMeasure, t: int, s: int) -> np.ndarray:
    """Density ratio of Q-bar between F-bar_s and F-bar_t, from the (Q, psi-hat) factors.

    Rows r < t are 1 and not used.
    """
    space = opt.base
    _check_times(space, t, s)
    exact = space.exact
    out = ones((space.horizon + 1, space.n_states), exact)
    left_t = 1 - Qbar.consumed_before(t)
    active = positive(left_t, exact)
    free_t = 1 - space.mu_before(t)
    free_s = 1 - space.mu_before(s)
    left_s = 1 - Qbar.consumed_before(s)
    for r in range(t, space.horizon + 1):
        if r < s:
            value = ratio(free_t * Qbar.psi[r] * xi(space, Qbar.q, t, r), space.mu[r] * left_t, 1, exact)
        else:
            value = ratio(free_t * left_s * xi(space, Qbar.q, t, s), free_s * left_t, 1, exact)
        out[r, active] = value[active]
    return out


def bar_w_map(opt: OptionalSpace, Qbar: Sequence[OptionalMeasure], wbar, t: int, s: int) -> np.ndarray:
    """w-bar_t^s(Q-bar, w-bar); wbar is an F-bar_t-measurable (T+1, N, d) field."""
    space = opt.base
    _check_times(space, t, s)
    wbar = np.asarray(wbar)
    out = wbar.copy()
    if t == s:
        return out
    factors = np.stack([xi_bar(opt, Qbar[i], t, s) for i in range(wbar.shape[2])], axis=2)
    for r in range(t, space.horizon + 1):
        out[r] = wbar[t] * factors[r]
    return out


# ===========================
# 🎲 Samplers
# ===========================

def adapted_field(space: ScenarioSpace, rng: np.random.Generator, t: int, width: int,
                  low: float = -3.0, high: float = 3.0) -> np.ndarray:
    """Random F_t-measurable (N, width) field."""
    out = zeros((space.n_states, width), space.exact)
    for a in range(len(space.partitions[t])):
        out[space.members(t, a)] = draw(rng, low, high, width, space.exact)
    return out


def random_density(space: ScenarioSpace, rng: np.random.Generator, t: int = 0,
                   null_prob: float = 0.0) -> np.ndarray:
    """Random dQ/dP with E_t[dQ/dP] = 1, optionally vanishing on some states."""
    raw = draw(rng, 0.1, 2.0, space.n_states, space.exact)
    if null_prob > 0:
        for a in range(len(space.partitions[t])):
            idx = space.members(t, a)
            for i in idx[1:]:
                if rng.random() < null_prob:
                    raw[i] = to_number(0, space.exact)
    return raw / cond_exp(space, raw, t)


def random_psi(space: ScenarioSpace, rng: np.random.Generator, t: int = 0, freeze_past: bool = True,
               exhaust_prob: float = 0.0) -> np.ndarray:
    """Random adapted psi with psi_r = mu_r for r < t when freeze_past is set."""
    exact = space.exact
    T, N = space.horizon, space.n_states
    psi = zeros((T + 1, N), exact)
    if freeze_past:
        psi[:t] = space.mu[:t]
        start = t
    else:
        start = 0
    left = 1 - psi[:start].sum(axis=0) if start else ones(N, exact)
    for r in range(start, T):
        frac = zeros(N, exact)
        for a in range(len(space.partitions[r])):
            idx = space.members(r, a)
            value = to_number(1, exact) if rng.random() < exhaust_prob else draw(rng, 0.05, 0.95, 1, exact)[0]
            frac[idx] = value
        psi[r] = left * frac
        left = left - psi[r]
    psi[T] = left
    return psi


def random_optional_measure(space: ScenarioSpace, rng: np.random.Generator, t: int = 0,
                            null_prob: float = 0.0, exhaust_prob: float = 0.0) -> OptionalMeasure:
    """Random Q-bar; for t > 0 it lies in the set of measures agreeing with P-bar before t."""
    q = random_density(space, rng, t=t, null_prob=null_prob)
    psi = random_psi(space, rng, t=t, freeze_past=t > 0, exhaust_prob=exhaust_prob)
    return compose(space, q, psi)


def measure_summary(measure: OptionalMeasure) -> Dict[str, list]:
    return {
        "q": [float(v) for v in measure.q],
        "psi": [[float(v) for v in row] for row in measure.psi],
    }


def as_floats(values) -> list:
    """Nested float lists for report payloads."""
    return np.asarray(values, dtype=float).tolist()
