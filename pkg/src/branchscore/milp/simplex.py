"""Dense-tableau simplex for the LP relaxations solved inside branch-and-bound.

The LP is ``min c @ x`` s.t. ``A @ x + s = b``, ``lower <= x <= upper``,
``s >= 0``.  Nonbasic variables sit at a finite bound (or at zero when free),
so binary upper bounds never become explicit rows.

Cold solves use the two-phase bounded primal simplex: phase one minimizes
the sum of bound violations of the basic variables, so it also works from a
basis handed in by the caller.  Pricing is Dantzig's rule until a run of
degenerate pivots is seen; Bland's rule (smallest eligible index for both
the entering and the leaving variable) then runs until a pivot makes
progress.  Cycling needs an unbroken degenerate run, which Bland's rule
always ends, so the switch back to Dantzig after progress stays cycle-free.

Re-solves after a bound change start from a :class:`TableauSnapshot` of an
optimal parent.  The parent basis stays dual feasible, so the dual simplex
(same degenerate-run switch to Bland's rule) restores primal feasibility in
a handful of pivots.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .instance import MilpInstance


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERIC_FAILURE = "numeric_failure"


class BasisStatus(enum.IntEnum):
    LOWER = 0
    BASIC = 1
    UPPER = 2
    ZERO = 3


LOWER, BASIC, UPPER, ZERO = 0, 1, 2, 3

PRIMAL_TOL = 1e-9
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
MIN_PIVOT = 1e-11
DEGENERATE_STREAK = 25
REFACTOR_EVERY = 64


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None
    objective: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    basis_status: np.ndarray
    iterations: int
    # column indices into [A | I] and per-column status, for warm starts
    basis: np.ndarray | None = None
    column_status: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def slacks(self, instance: MilpInstance) -> np.ndarray:
        return instance.b - instance.A @ self.x


@dataclass
class WarmStart:
    basis: np.ndarray
    column_status: np.ndarray


def _failed(status: LpStatus, n: int, m: int, iterations: int) -> LpResult:
    return LpResult(
        status=status,
        x=None,
        objective=np.inf if status is LpStatus.INFEASIBLE else np.nan,
        duals=np.zeros(m),
        reduced_costs=np.zeros(n),
        basis_status=np.zeros(n, dtype=np.int8),
        iterations=iterations,
    )


class _Tableau:
    """``T = B^-1 [A I b]`` plus current values of every column."""

    def __init__(self, M, b, cost, lo, up, basis, status, T=None):
        self.M = M
        self.b = b
        self.cost = cost
        self.lo = lo
        self.up = up
        self.m, self.N = M.shape
        self.basis = basis
        self.status = status
        self.xval = np.zeros(self.N)
        self._seat_nonbasic()
        if T is None:
            self.refactor()
        else:
            self.T = T
            self._recompute_basic()

    def _seat_nonbasic(self) -> None:
        st = self.status
        self.xval[:] = 0.0
        self.xval[st == LOWER] = self.lo[st == LOWER]
        self.xval[st == UPPER] = self.up[st == UPPER]

    def _recompute_basic(self) -> None:
        nb = self.status != BASIC
        self.xval[self.basis] = self.T[:, self.N] - self.T[:, : self.N][:, nb] @ self.xval[nb]

    def refactor(self) -> None:
        B = self.M[:, self.basis]
        sol = np.linalg.solve(B, np.column_stack([self.M, self.b]))
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError("non-finite basis solve")
        self.T = sol
        self._recompute_basic()

    def reduced_costs(self) -> np.ndarray:
        return self.cost - self.cost[self.basis] @ self.T[:, : self.N]

    def _pivot(self, r_idx: int, j: int) -> None:
        T = self.T
        row = T[r_idx] / T[r_idx, j]
        colj = T[:, j].copy()
        colj[r_idx] = 0.0
        rows = np.flatnonzero(colj)
        T[rows] -= colj[rows, None] * row
        T[r_idx] = row
        self.basis[r_idx] = j

    def primal(self, iteration_limit: int) -> tuple[LpStatus, int]:
        m, N = self.m, self.N
        lo, up = self.lo, self.up
        bland = False
        streak = 0
        since_refactor = 0
        it = 0
        cost_b = np.empty(m)
        movable = lo < up
        while True:
            xb = self.xval[self.basis]
            lb = lo[self.basis]
            ub = up[self.basis]
            below = xb < lb - PRIMAL_TOL
            above = xb > ub + PRIMAL_TOL
            phase_one = bool(below.any() or above.any())
            if phase_one:
                cost_b[:] = 0.0
                cost_b[below] = -1.0
                cost_b[above] = 1.0
                d = -(cost_b @ self.T[:, :N])
            else:
                d = self.reduced_costs()
            st = self.status
            eligible = (
                ((st == LOWER) & (d < -DUAL_TOL))
                | ((st == UPPER) & (d > DUAL_TOL))
                | ((st == ZERO) & (np.abs(d) > DUAL_TOL))
            )
            eligible &= movable
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return (LpStatus.INFEASIBLE if phase_one else LpStatus.OPTIMAL), it
            if it >= iteration_limit:
                return LpStatus.ITERATION_LIMIT, it
            if bland:
                j = int(cand[0])
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            delta = 1.0 if d[j] < 0 else -1.0
            alpha = delta * self.T[:, j]

            # step length at which each basic variable reaches a breakpoint
            ratios = np.full(m, np.inf)
            dec = alpha > PIVOT_TOL
            inc = alpha < -PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                r = np.where(above, (xb - ub) / alpha, (xb - lb) / alpha)
                mask = dec & ~below
                ratios[mask] = r[mask]
                r = np.where(below, (lb - xb) / -alpha, (ub - xb) / -alpha)
                mask = inc & ~above
                ratios[mask] = r[mask]
            ratios = np.maximum(ratios, 0.0)
            flip = up[j] - lo[j] if st[j] != ZERO else np.inf
            t_min = ratios.min() if m else np.inf
            if not np.isfinite(t_min) and not np.isfinite(flip):
                if phase_one:
                    return LpStatus.NUMERIC_FAILURE, it
                return LpStatus.UNBOUNDED, it
            it += 1
            if flip <= t_min:
                self.xval[j] += delta * flip
                st[j] = UPPER if delta > 0 else LOWER
                self.xval[self.basis] = xb - flip * alpha
                streak = 0
                bland = False
                continue
            ties = np.flatnonzero(ratios <= t_min + 1e-12)
            if bland:
                r_idx = int(ties[np.argmin(self.basis[ties])])
            else:
                r_idx = int(ties[np.argmax(np.abs(alpha[ties]))])
            if abs(alpha[r_idx]) < MIN_PIVOT:
                return LpStatus.NUMERIC_FAILURE, it
            t = ratios[r_idx]
            leaving = int(self.basis[r_idx])
            if alpha[r_idx] > 0:
                to_upper = bool(above[r_idx])
            else:
                to_upper = not bool(below[r_idx])
            self.xval[self.basis] = xb - t * alpha
            self.xval[leaving] = up[leaving] if to_upper else lo[leaving]
            st[leaving] = UPPER if to_upper else LOWER
            self.xval[j] += delta * t
            st[j] = BASIC
            self._pivot(r_idx, j)

            if t <= 1e-12:
                streak += 1
                if streak >= DEGENERATE_STREAK:
                    bland = True
            else:
                # progress was made, so Dantzig pricing cannot cycle back here
                streak = 0
                bland = False
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0

    def dual_feasible(self, d: np.ndarray) -> bool:
        st = self.status
        free = self.lo < self.up
        bad = (
            ((st == LOWER) & (d < -DUAL_TOL))
            | ((st == UPPER) & (d > DUAL_TOL))
            | ((st == ZERO) & (np.abs(d) > DUAL_TOL))
        ) & free
        return not bad.any()

    def dual(self, iteration_limit: int) -> tuple[LpStatus, int]:
        """Dual simplex from a dual-feasible basis."""
        N = self.N
        lo, up = self.lo, self.up
        d = self.reduced_costs()
        bland = False
        streak = 0
        since_refactor = 0
        it = 0
        movable = lo < up
        while True:
            xb = self.xval[self.basis]
            lb = lo[self.basis]
            ub = up[self.basis]
            viol = np.maximum(lb - xb, 0.0) + np.maximum(xb - ub, 0.0)
            rows = np.flatnonzero(viol > PRIMAL_TOL)
            if rows.size == 0:
                return LpStatus.OPTIMAL, it
            if it >= iteration_limit:
                return LpStatus.ITERATION_LIMIT, it
            if bland:
                r_idx = int(rows[np.argmin(self.basis[rows])])
            else:
                r_idx = int(rows[np.argmax(viol[rows])])
            leaving = int(self.basis[r_idx])
            to_lower = xb[r_idx] < lb[r_idx]
            row = self.T[r_idx, :N]
            st = self.status
            # leaving must move up (to_lower) or down; x_B_r changes by -row_j * dx_j
            sign = -1.0 if to_lower else 1.0
            a = sign * row
            eligible = movable & (
                ((st == LOWER) & (a > PIVOT_TOL))
                | ((st == UPPER) & (a < -PIVOT_TOL))
                | ((st == ZERO) & (np.abs(a) > PIVOT_TOL))
            )
            cand = np.flatnonzero(eligible)
            if cand.size == 0:
                return LpStatus.INFEASIBLE, it
            ratio = np.abs(d[cand]) / np.abs(a[cand])
            t_min = ratio.min()
            ties = cand[ratio <= t_min + 1e-12]
            if bland:
                j = int(ties[0])
            else:
                j = int(ties[np.argmax(np.abs(row[ties]))])
            if abs(row[j]) < MIN_PIVOT:
                return LpStatus.NUMERIC_FAILURE, it
            it += 1
            target = lb[r_idx] if to_lower else ub[r_idx]
            dx = (xb[r_idx] - target) / row[j]
            self.xval[self.basis] = xb - dx * self.T[:, j]
            self.xval[j] += dx
            self.xval[leaving] = target
            st[leaving] = LOWER if to_lower else UPPER
            st[j] = BASIC
            d -= (d[j] / row[j]) * row
            d[j] = 0.0
            self._pivot(r_idx, j)

            if t_min <= 1e-12:
                streak += 1
                if streak >= DEGENERATE_STREAK:
                    bland = True
            else:
                # progress was made, so Dantzig pricing cannot cycle back here
                streak = 0
                bland = False
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self.refactor()
                d = self.reduced_costs()
                since_refactor = 0


@dataclass
class TableauSnapshot:
    """Optimal tableau of a solved LP, reusable for re-solves under new bounds."""

    T: np.ndarray
    basis: np.ndarray
    column_status: np.ndarray


def _initial_status(lo: np.ndarray, up: np.ndarray) -> np.ndarray:
    status = np.full(lo.shape[0], ZERO, dtype=np.int8)
    status[np.isfinite(up)] = UPPER
    status[np.isfinite(lo)] = LOWER
    return status


def _reseat(status: np.ndarray, lo: np.ndarray, up: np.ndarray) -> np.ndarray:
    """Keep each nonbasic column on the same side when that bound still exists."""
    status = status.copy()
    nb = status != BASIC
    want_upper = status == UPPER
    fix_upper = nb & np.isfinite(up) & (want_upper | ~np.isfinite(lo))
    fix_lower = nb & ~fix_upper & np.isfinite(lo)
    status[nb] = ZERO
    status[fix_lower] = LOWER
    status[fix_upper] = UPPER
    return status


class _Problem:
    def __init__(self, instance: MilpInstance, lower, upper):
        n, m = instance.num_vars, instance.num_cons
        self.n, self.m = n, m
        self.M = _full_matrix(instance)
        self.lo = np.concatenate([lower, np.zeros(m)])
        self.up = np.concatenate([upper, np.full(m, np.inf)])
        self.cost = np.concatenate([instance.c, np.zeros(m)])


_MATRIX_CACHE: dict[int, tuple[MilpInstance, np.ndarray]] = {}


def _full_matrix(instance: MilpInstance) -> np.ndarray:
    key = id(instance)
    hit = _MATRIX_CACHE.get(key)
    if hit is not None and hit[0] is instance:
        return hit[1]
    M = np.hstack([instance.dense_A, np.eye(instance.num_cons)])
    if len(_MATRIX_CACHE) > 8:
        _MATRIX_CACHE.clear()
    _MATRIX_CACHE[key] = (instance, M)
    return M


def solve_lp_relaxation(
    instance: MilpInstance,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
    warm_start: WarmStart | TableauSnapshot | None = None,
    iteration_limit: int = 50_000,
    finalize: bool = True,
) -> LpResult:
    """Solve the LP relaxation of ``instance`` under local variable bounds.

    ``finalize=False`` skips the closing refactorization and dual solve; the
    result then carries the objective, ``x`` and the basis but zero duals and
    reduced costs (enough for strong-branching probes).
    """
    n, m = instance.num_vars, instance.num_cons
    lower = instance.lower if lower is None else np.asarray(lower, dtype=float)
    upper = instance.upper if upper is None else np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        return _failed(LpStatus.INFEASIBLE, n, m, 0)
    if m == 0:
        return _solve_box(instance, lower, upper)

    prob = _Problem(instance, lower, upper)
    tab = None
    use_dual = False
    if isinstance(warm_start, TableauSnapshot):
        status = _reseat(warm_start.column_status, prob.lo, prob.up)
        tab = _Tableau(prob.M, instance.b, prob.cost, prob.lo, prob.up,
                       warm_start.basis.copy(), status, T=warm_start.T.copy())
        use_dual = tab.dual_feasible(tab.reduced_costs())
    elif isinstance(warm_start, WarmStart):
        status = _reseat(warm_start.column_status, prob.lo, prob.up)
        try:
            tab = _Tableau(prob.M, instance.b, prob.cost, prob.lo, prob.up, warm_start.basis.copy(), status)
            use_dual = tab.dual_feasible(tab.reduced_costs())
        except np.linalg.LinAlgError:
            tab = None
    if tab is None:
        status = _initial_status(prob.lo, prob.up)
        basis = np.arange(n, n + m)
        status[basis] = BASIC
        try:
            tab = _Tableau(prob.M, instance.b, prob.cost, prob.lo, prob.up, basis, status)
        except np.linalg.LinAlgError:
            return _failed(LpStatus.NUMERIC_FAILURE, n, m, 0)

    try:
        iters = 0
        if use_dual:
            lp_status, iters = tab.dual(iteration_limit)
            if lp_status is LpStatus.NUMERIC_FAILURE:
                tab.refactor()
                lp_status = None
        else:
            lp_status = None
        if lp_status is None:
            lp_status, more = tab.primal(iteration_limit - iters)
            iters += more
        if finalize and lp_status is LpStatus.OPTIMAL:
            tab.refactor()
    except np.linalg.LinAlgError:
        return _failed(LpStatus.NUMERIC_FAILURE, n, m, 0)
    if lp_status is not LpStatus.OPTIMAL:
        return _failed(lp_status, n, m, iters)

    x = tab.xval[:n].copy()
    slack = tab.xval[n:]
    if np.any(x < lower - 1e-7) or np.any(x > upper + 1e-7) or np.any(slack < -1e-7):
        return _failed(LpStatus.NUMERIC_FAILURE, n, m, iters)
    # snap onto bounds that were hit within tolerance
    x = np.where(np.abs(x - lower) <= PRIMAL_TOL, lower, x)
    x = np.where(np.abs(x - upper) <= PRIMAL_TOL, upper, x)

    if finalize:
        B = prob.M[:, tab.basis]
        duals = np.linalg.solve(B.T, prob.cost[tab.basis])
        reduced = instance.c - instance.dense_A.T @ duals
        reduced[tab.status[:n] == BASIC] = 0.0
    else:
        duals = np.zeros(m)
        reduced = np.zeros(n)
    return LpResult(
        status=LpStatus.OPTIMAL,
        x=x,
        objective=float(instance.c @ x),
        duals=duals,
        reduced_costs=reduced,
        basis_status=tab.status[:n].astype(np.int8).copy(),
        iterations=iters,
        basis=tab.basis.copy(),
        column_status=tab.status.copy(),
    )


def snapshot(instance: MilpInstance, lower, upper, lp: LpResult) -> TableauSnapshot:
    """Rebuild the optimal tableau of ``lp`` for cheap dual re-solves."""
    if not lp.optimal or lp.basis is None:
        raise ValueError("snapshot needs an optimal LP with a basis")
    prob = _Problem(instance, np.asarray(lower, float), np.asarray(upper, float))
    B = prob.M[:, lp.basis]
    T = np.linalg.solve(B, np.column_stack([prob.M, instance.b]))
    return TableauSnapshot(T, lp.basis.copy(), lp.column_status.copy())


def _solve_box(instance: MilpInstance, lower: np.ndarray, upper: np.ndarray) -> LpResult:
    c = instance.c
    n = c.shape[0]
    x = np.zeros(n)
    status = np.full(n, ZERO, dtype=np.int8)
    for j in range(n):
        if c[j] > 0:
            if not np.isfinite(lower[j]):
                return _failed(LpStatus.UNBOUNDED, n, 0, 0)
            x[j], status[j] = lower[j], LOWER
        elif c[j] < 0:
            if not np.isfinite(upper[j]):
                return _failed(LpStatus.UNBOUNDED, n, 0, 0)
            x[j], status[j] = upper[j], UPPER
        elif np.isfinite(lower[j]):
            x[j], status[j] = lower[j], LOWER
        elif np.isfinite(upper[j]):
            x[j], status[j] = upper[j], UPPER
    return LpResult(
        status=LpStatus.OPTIMAL,
        x=x,
        objective=float(c @ x),
        duals=np.zeros(0),
        reduced_costs=c.copy(),
        basis_status=status,
        iterations=0,
        basis=np.zeros(0, dtype=int),
        column_status=status.copy(),
    )
