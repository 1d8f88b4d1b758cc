import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import cdd
import numpy as np
from scipy.optimize import linprog

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

logger = logging.getLogger("LP")


class LPError(RuntimeError):
    """The solver stopped without a usable verdict (numerical trouble)."""


@dataclass(frozen=True)
class LPResult:
    status: str
    value: object = None
    x: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def minimize(c, A, b, exact: bool = False) -> LPResult:
    """min c.x subject to A x >= b, all variables free.

    Floats go through HiGHS; exact mode runs the rational simplex of cddlib.
    """
    c = np.asarray(c, dtype=object if exact else float)
    A = np.asarray(A, dtype=object if exact else float).reshape(-1, c.shape[0])
    b = np.asarray(b, dtype=object if exact else float).reshape(-1)
    if A.shape[0] == 0:
        if all(v == 0 for v in c):
            zero = Fraction(0) if exact else 0.0
            return LPResult(OPTIMAL, zero, np.full(c.shape[0], zero, dtype=object if exact else float))
        return LPResult(UNBOUNDED)
    if exact:
        return _minimize_rational(c, A, b)
    return _minimize_highs(c, A, b)


def _minimize_highs(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> LPResult:
    n = c.shape[0]
    res = linprog(c, A_ub=-A, b_ub=-b, bounds=[(None, None)] * n, method="highs")
    if res.status == 0:
        return LPResult(OPTIMAL, float(res.fun), np.asarray(res.x, dtype=float))
    if res.status == 3:
        return LPResult(UNBOUNDED)
    if res.status == 2:
        # HiGHS may report "infeasible or unbounded"; a zero objective tells them apart
        phase1 = linprog(np.zeros(n), A_ub=-A, b_ub=-b, bounds=[(None, None)] * n, method="highs")
        if phase1.status == 0:
            return LPResult(UNBOUNDED)
        return LPResult(INFEASIBLE)
    logger.warning(f"⚠️ HiGHS stopped with status {res.status}: {res.message}")
    raise LPError(res.message)


def _minimize_rational(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> LPResult:
    rows = [[Fraction(-bi)] + [Fraction(v) for v in Ai] for Ai, bi in zip(A, b)]
    mat = cdd.Matrix(rows, number_type="fraction")
    mat.obj_type = cdd.LPObjType.MIN
    mat.obj_func = tuple([Fraction(0)] + [Fraction(v) for v in c])
    lp = cdd.LinProg(mat)
    lp.solve()
    if lp.status == cdd.LPStatusType.OPTIMAL:
        x = np.empty(len(c), dtype=object)
        x[:] = [Fraction(v) for v in lp.primal_solution]
        return LPResult(OPTIMAL, Fraction(lp.obj_value), x)
    if lp.status in (cdd.LPStatusType.INCONSISTENT, cdd.LPStatusType.STRUC_INCONSISTENT):
        return LPResult(INFEASIBLE)
    if lp.status in (cdd.LPStatusType.DUAL_INCONSISTENT, cdd.LPStatusType.STRUC_DUAL_INCONSISTENT):
        return LPResult(UNBOUNDED)
    raise LPError(f"cddlib LP ended with status {lp.status}")


def maximize_slack(A, b, cuts_A, cuts_b, exact: bool = False, cap: float = 1.0) -> LPResult:
    """max delta s.t. A x >= b, cuts_A x + delta <= cuts_b, delta <= cap.

    A positive optimum gives a point strictly violating every cut.
    """
    A = np.asarray(A, dtype=object if exact else float)
    cuts_A = np.asarray(cuts_A, dtype=object if exact else float)
    n = cuts_A.shape[1] if cuts_A.size else A.shape[1]
    A = A.reshape(-1, n)
    cuts_A = cuts_A.reshape(-1, n)
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    rows = []
    rhs = []
    for Ai, bi in zip(A, b):
        rows.append(list(Ai) + [zero])
        rhs.append(bi)
    for Ci, ci in zip(cuts_A, cuts_b):
        rows.append([-v for v in Ci] + [-one])
        rhs.append(-ci)
    rows.append([zero] * n + [-one])
    rhs.append(-(Fraction(cap) if exact else cap))
    c = [zero] * n + [-one]
    res = minimize(c, rows, rhs, exact=exact)
    if res.optimal:
        return LPResult(OPTIMAL, -res.value, res.x[:n])
    return res
