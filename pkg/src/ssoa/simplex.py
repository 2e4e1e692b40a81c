"""Dense two-phase simplex with bounded variables.

Self-contained LP routine backing the branch-and-bound solver: no external
solver dependency, deterministic pivoting, Bland's rule engaged after a run
of degenerate pivots to break cycles.  Variables carry finite lower bounds
and optionally finite upper bounds; upper bounds are handled implicitly
(nonbasic-at-upper states) rather than as extra rows, which keeps binary
models compact.

Geared to desk-scale models (thousands of variables); the tableau is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LE, EQ, GE = -1, 0, 1

_FEAS_TOL = 1e-7
_PIVOT_TOL = 1e-8
_RC_TOL = 1e-9
_DEGENERATE_RUN = 100
_ITER_FACTOR = 200

AT_LOWER, AT_UPPER, BASIC = 0, 1, 2


class SimplexError(Exception):
    pass


@dataclass
class LpResult:
    status: str                 # optimal | infeasible | unbounded | iteration_limit
    objective: float | None
    x: np.ndarray | None
    infeasible_rows: list[int] | None = None  # rows still violated at phase-1 end


def solve_lp(
    c: np.ndarray,
    A: np.ndarray,
    relations: np.ndarray,
    b: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_iterations: int | None = None,
) -> LpResult:
    """Minimize ``c @ x`` subject to ``A x (rel) b`` and ``lower <= x <= upper``.

    ``relations`` holds LE/EQ/GE per row.  Lower bounds must be finite;
    upper bounds may be ``inf``.
    """
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    relations = np.asarray(relations, dtype=np.int64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    m = A.shape[0] if A.ndim == 2 else 0
    n = c.size
    if not np.all(np.isfinite(lower)):
        raise SimplexError("all variable lower bounds must be finite")
    if np.any(upper - lower < -_FEAS_TOL):
        return LpResult("infeasible", None, None, [])
    if m == 0:
        return _solve_unconstrained(c, lower, upper)

    # shift variables to zero lower bounds
    u = upper - lower
    b0 = b - A @ lower

    # after negating rows to non-negative rhs, a row whose slack lands at +1
    # starts with a basic slack; only the rest need an artificial column
    negate = b0 < 0
    slack_sign = np.where(relations == LE, 1.0, np.where(relations == GE, -1.0, 0.0))
    slack_sign[negate] *= -1.0
    needs_art = slack_sign != 1.0

    n_slack = int(np.sum(relations != EQ))
    n_art = int(np.sum(needs_art))
    cols = n + n_slack + n_art
    T = np.zeros((m, cols))
    T[:, :n] = A
    ub = np.full(cols, np.inf)
    ub[:n] = u
    rhs = b0.copy()

    k = n
    slack_at: dict[int, int] = {}
    for i in range(m):
        if relations[i] == LE:
            T[i, k] = 1.0
            slack_at[i] = k
            k += 1
        elif relations[i] == GE:
            T[i, k] = -1.0
            slack_at[i] = k
            k += 1

    T[negate, :] *= -1.0
    rhs[negate] = -rhs[negate]

    basis = np.empty(m, dtype=np.int64)
    art_first = n + n_slack
    art_rows: list[int] = []
    k = art_first
    for i in range(m):
        if not needs_art[i]:
            basis[i] = slack_at[i]
        else:
            T[i, k] = 1.0
            basis[i] = k
            art_rows.append(i)
            k += 1

    status = np.zeros(cols, dtype=np.int8)
    status[basis] = BASIC
    xB = rhs.copy()
    max_it = max_iterations or _ITER_FACTOR * (m + cols)

    if art_rows:
        c1 = np.zeros(cols)
        c1[art_first:] = 1.0
        outcome = _iterate(T, xB, basis, status, ub, c1, max_it)
        if outcome == "iteration_limit":
            return LpResult("iteration_limit", None, None)
        bad = [i for i in range(m)
               if basis[i] >= art_first
               and xB[i] > _FEAS_TOL * max(1.0, abs(rhs[i]))]
        if bad:
            return LpResult("infeasible", None, None, bad)
        ub[art_first:] = 0.0
        _expel_artificials(T, xB, basis, status, art_first)

    c2 = np.zeros(cols)
    c2[:n] = c
    # artificials are pinned at zero and can never re-enter, so phase 2 can
    # work on the leading tableau block as long as none stayed basic
    if np.all(basis < art_first):
        outcome = _iterate(T[:, :art_first], xB, basis, status[:art_first],
                           ub[:art_first], c2[:art_first], max_it)
    else:
        outcome = _iterate(T, xB, basis, status, ub, c2, max_it)
    if outcome == "iteration_limit":
        return LpResult("iteration_limit", None, None)
    if outcome == "unbounded":
        return LpResult("unbounded", None, None)

    x_shift = np.zeros(cols)
    nb_up = status == AT_UPPER
    x_shift[nb_up] = ub[nb_up]
    x_shift[basis] = xB
    x = x_shift[:n] + lower
    return LpResult("optimal", float(c @ x), x)


def _solve_unconstrained(c, lower, upper) -> LpResult:
    x = np.where(c >= 0, lower, upper)
    if np.any(~np.isfinite(x)):
        return LpResult("unbounded", None, None)
    x = x.astype(np.float64)
    return LpResult("optimal", float(c @ x), x)


def _iterate(T, xB, basis, status, ub, c, max_it) -> str:
    """Run bounded-variable pivots in place until optimal/unbounded."""
    m, cols = T.shape
    degenerate_run = 0
    bland = False
    scale = np.maximum(1.0, np.abs(c))
    work = np.empty_like(T)
    for _ in range(max_it):
        rc = c - c[basis] @ T
        movable = ub > _PIVOT_TOL
        cand = np.where(((status == AT_LOWER) & movable & (rc < -_RC_TOL * scale))
                        | ((status == AT_UPPER) & movable & (rc > _RC_TOL * scale)))[0]
        if cand.size == 0:
            return "optimal"
        e = int(cand[0]) if bland else int(cand[np.argmax(np.abs(rc[cand]) / scale[cand])])
        direction = 1.0 if status[e] == AT_LOWER else -1.0
        col = T[:, e] * direction

        # ratio test: first bound hit among the entering variable's own range
        # and every basic variable pushed toward one of its bounds
        basic_ub = ub[basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_dec = np.where(col > _PIVOT_TOL, np.maximum(xB, 0.0) / col, np.inf)
            t_inc = np.where((col < -_PIVOT_TOL) & np.isfinite(basic_ub),
                             np.maximum(basic_ub - xB, 0.0) / np.where(
                                 col < -_PIVOT_TOL, -col, 1.0),
                             np.inf)
        t_rows = np.minimum(t_dec, t_inc)
        t_row_min = float(t_rows.min()) if m else np.inf

        if ub[e] <= t_row_min + _FEAS_TOL:
            if not np.isfinite(ub[e]):
                return "unbounded"
            # entering variable flips to its opposite bound, basis unchanged
            xB -= ub[e] * col
            status[e] = AT_UPPER if status[e] == AT_LOWER else AT_LOWER
            degenerate_run = 0
            continue

        ties = np.where(t_rows <= t_row_min + _FEAS_TOL)[0]
        if bland:
            leave = int(ties[np.argmin(basis[ties])])
        else:
            pivots = np.abs(T[ties, e])
            order = np.lexsort((basis[ties], -pivots))
            leave = int(ties[order[0]])
        leave_to_upper = bool(t_inc[leave] < t_dec[leave])
        t = max(min(t_row_min, t_rows[leave]), 0.0)

        if t <= _FEAS_TOL:
            degenerate_run += 1
            if degenerate_run >= _DEGENERATE_RUN:
                bland = True
        else:
            degenerate_run = 0
            bland = False

        pivot = T[leave, e]
        if abs(pivot) < _PIVOT_TOL:
            bland = True
            continue
        xB -= t * col
        entering_value = t if direction > 0 else ub[e] - t
        status[basis[leave]] = AT_UPPER if leave_to_upper else AT_LOWER
        status[e] = BASIC
        basis[leave] = e
        T[leave, :] /= pivot
        factor = T[:, e].copy()
        factor[leave] = 0.0
        # rank-1 elimination of the pivot column from every other row
        np.multiply(factor[:, None], T[leave, :][None, :], out=work)
        np.subtract(T, work, out=T)
        xB[leave] = entering_value
    return "iteration_limit"


def _expel_artificials(T, xB, basis, status, art_first: int) -> None:
    """Pivot zero-valued basic artificials out where possible; redundant rows
    keep their artificial basic, pinned at zero by its upper bound."""
    m = T.shape[0]
    for i in range(m):
        col = int(basis[i])
        if col < art_first:
            continue
        candidates = np.where((np.abs(T[i, :art_first]) > 1e-7)
                              & (status[:art_first] == AT_LOWER))[0]
        if candidates.size == 0:
            continue
        e = int(candidates[np.argmax(np.abs(T[i, candidates]))])
        pivot = T[i, e]
        val = xB[i] / pivot
        status[col] = AT_LOWER
        status[e] = BASIC
        basis[i] = e
        T[i, :] /= pivot
        delta = T[:, e].copy()
        delta[i] = 0.0
        np.subtract(T, np.outer(delta, T[i, :]), out=T)
        xB -= delta * val
        xB[i] = val
