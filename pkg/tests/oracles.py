"""Independent reference solvers used only by the tests.

Nothing here imports the package's solver code, so an agreement between the
two is real evidence.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog


def naive_simplex(c, A, b, lower, upper, max_iter=20000):
    """Two-phase tableau simplex with Bland's rule.

    Solves ``min c x`` s.t. ``A x <= b``, ``lower <= x <= upper`` (lower finite).
    Returns (status, x, objective) with status in {"optimal", "infeasible",
    "unbounded"}.
    """
    c = np.asarray(c, float)
    A = np.atleast_2d(np.asarray(A, float))
    b = np.asarray(b, float)
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    n = c.size
    # shift to y = x - lower >= 0 and turn finite upper bounds into rows
    rows = [A]
    rhs = [b - A @ lower]
    fin = np.flatnonzero(np.isfinite(upper))
    if fin.size:
        E = np.zeros((fin.size, n))
        E[np.arange(fin.size), fin] = 1.0
        rows.append(E)
        rhs.append(upper[fin] - lower[fin])
    M = np.vstack(rows)
    r = np.concatenate(rhs)
    m = M.shape[0]
    # [M | I_slack | I_art] with rows flipped so rhs >= 0
    sign = np.where(r < 0, -1.0, 1.0)
    T = np.hstack([M * sign[:, None], np.diag(sign), np.eye(m)])
    rhs = r * sign
    ncol = n + 2 * m
    basis = list(range(n + m, ncol))

    def run(cost, allowed):
        it = 0
        while True:
            it += 1
            if it > max_iter:
                raise RuntimeError("naive simplex did not converge")
            cb = cost[basis]
            d = cost - cb @ T
            enter = next((j for j in range(ncol) if allowed[j] and d[j] < -1e-10), None)
            if enter is None:
                return "optimal"
            col = T[:, enter]
            best, leave = None, None
            for i in range(m):
                if col[i] > 1e-12:
                    ratio = rhs[i] / col[i]
                    if best is None or ratio < best - 1e-12 or (abs(ratio - best) <= 1e-12 and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return "unbounded"
            piv = T[leave, enter]
            T[leave] /= piv
            rhs[leave] /= piv
            for i in range(m):
                if i != leave and T[i, enter] != 0.0:
                    f = T[i, enter]
                    T[i] -= f * T[leave]
                    rhs[i] -= f * rhs[leave]
            basis[leave] = enter

    phase1 = np.zeros(ncol)
    phase1[n + m :] = 1.0
    run(phase1, np.ones(ncol, bool))
    if sum(rhs[i] for i in range(m) if basis[i] >= n + m) > 1e-7:
        return "infeasible", None, np.inf
    # drive zero-level artificials out of the basis where possible
    for i in range(m):
        if basis[i] >= n + m:
            j = next((j for j in range(n + m) if abs(T[i, j]) > 1e-9), None)
            if j is not None:
                piv = T[i, j]
                T[i] /= piv
                rhs[i] /= piv
                for k in range(m):
                    if k != i and T[k, j] != 0.0:
                        f = T[k, j]
                        T[k] -= f * T[i]
                        rhs[k] -= f * rhs[i]
                basis[i] = j
    cost = np.zeros(ncol)
    cost[:n] = c
    allowed = np.zeros(ncol, bool)
    allowed[: n + m] = True
    if run(cost, allowed) == "unbounded":
        return "unbounded", None, -np.inf
    y = np.zeros(ncol)
    for i, j in enumerate(basis):
        y[j] = rhs[i]
    x = y[:n] + lower
    return "optimal", x, float(c @ x)


def brute_force_milp(instance):
    """Enumerate every assignment of the (bounded) integer variables.

    Continuous variables, if any, are optimized by scipy's LP solver for each
    assignment. Returns the optimal objective, or inf when infeasible.
    """
    A = instance.A.toarray()
    b, c = instance.b, instance.c
    ints = np.flatnonzero(instance.integrality)
    conts = np.flatnonzero(~instance.integrality)
    ranges = [range(int(np.ceil(instance.lower[j])), int(np.floor(instance.upper[j])) + 1) for j in ints]
    best = np.inf
    for combo in itertools.product(*ranges):
        xi = np.asarray(combo, float)
        fixed = A[:, ints] @ xi
        if conts.size == 0:
            if np.all(fixed <= b + 1e-9):
                best = min(best, float(c[ints] @ xi))
            continue
        res = linprog(
            c[conts],
            A_ub=A[:, conts],
            b_ub=b - fixed,
            bounds=list(zip(instance.lower[conts], instance.upper[conts])),
            method="highs",
        )
        if res.status == 0:
            best = min(best, float(c[ints] @ xi) + res.fun)
    return best


def random_binary_milp(rng, n=None, m=None):
    """Small feasible pure-binary MILP (x = 0 is always feasible)."""
    from branchscore.milp import from_dense

    n = n or int(rng.integers(2, 9))
    m = m or int(rng.integers(1, 11))
    A = rng.integers(-3, 8, size=(m, n)).astype(float)
    A[A[:, 0] == 0, 0] = 1.0  # no empty rows
    b = rng.integers(1, 3 * n, size=m).astype(float)
    c = -rng.integers(1, 10, size=n).astype(float)
    return from_dense(c, A, b, np.zeros(n), np.ones(n))


def random_lp(rng, m=10, n=20):
    """Feasible bounded LP with a known interior-ish point."""
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0.0, 1.0, size=n)
    b = A @ x0 + rng.uniform(0.1, 1.0, size=m)
    c = rng.normal(size=n)
    upper = np.full(n, 2.0)
    return c, A, b, np.zeros(n), upper
