"""Best-bound branch-and-bound with eagerly solved children.

Both children of a branching are LP-solved as soon as they are created
(dual simplex from the parent's optimal tableau), so every open node carries its own LP
bound and the search state sees every child outcome immediately.  The node
count reported is the number of children created; a root LP that is already
integral gives 0 nodes.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..features import NodeContext, StaticFeatureCache
from .instance import MilpInstance
from .simplex import LpResult, LpStatus, TableauSnapshot, solve_lp_relaxation
from .state import DOWN, UP, SearchState, update_search_state

PRUNE_TOL = 1e-9


class ContractViolation(ValueError):
    pass


class BranchingPolicy(Protocol):
    def select(self, ctx: NodeContext, candidates: np.ndarray) -> int:
        """Return the chosen variable index (an element of ``candidates``)."""

    def reset(self, instance: MilpInstance, config: "BnbConfig") -> None:
        ...


@dataclass
class BnbConfig:
    node_limit: int = 1_000_000
    time_limit: float = 3600.0
    integrality_tolerance: float = 1e-6
    node_selection: str = "best_bound"
    rng_seed: int = 0
    warm_start: bool = True
    record_trace: bool = False

    def __post_init__(self):
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.node_selection not in ("best_bound", "depth_first"):
            raise ValueError(f"unknown node selection {self.node_selection!r}")


@dataclass
class BnbStats:
    nodes: int
    wall_time: float
    incumbent_objective: float | None
    best_bound: float
    gap: float
    status: str
    incumbent: np.ndarray | None = None
    lp_iterations: int = 0
    bound_trace: list[float] = field(default_factory=list)
    incumbent_trace: list[float] = field(default_factory=list)


def primal_dual_gap(incumbent: float | None, bound: float) -> float:
    """|incumbent - bound| / max(|incumbent|, 1e-10) clipped to [0, 1]; 1 without incumbent."""
    if incumbent is None or not math.isfinite(incumbent):
        return 1.0
    if not math.isfinite(bound):
        return 1.0
    return min(max(abs(incumbent - bound) / max(abs(incumbent), 1e-10), 0.0), 1.0)


def candidate_set(lp: LpResult, instance: MilpInstance, tol: float = 1e-6) -> np.ndarray:
    if not lp.optimal:
        raise ContractViolation("candidate_set needs an optimal LP")
    x = lp.x
    frac = x - np.floor(x)
    dist = np.minimum(frac, 1.0 - frac)
    return np.flatnonzero(instance.integrality & (dist > tol))


def branch(lower: np.ndarray, upper: np.ndarray, var: int, x_value: float, tol: float = 1e-6):
    """Split the box on ``var``; returns ((lo, up) of the down child, (lo, up) of the up child)."""
    frac = x_value - math.floor(x_value)
    if min(frac, 1.0 - frac) <= tol:
        raise ContractViolation(f"x[{var}] = {x_value!r} is integral, cannot branch")
    down_up = upper.copy()
    down_up[var] = math.floor(x_value)
    up_lo = lower.copy()
    up_lo[var] = math.ceil(x_value)
    return (lower.copy(), down_up), (up_lo, upper.copy())


@dataclass(order=True)
class _Node:
    key: tuple
    id: int = field(compare=False)
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    lp: LpResult = field(compare=False)
    depth: int = field(compare=False)


class _Solver:
    def __init__(self, instance: MilpInstance, policy: BranchingPolicy, config: BnbConfig):
        self.instance = instance
        self.policy = policy
        self.config = config
        self.state = SearchState(instance.num_vars)
        self.static: StaticFeatureCache | None = None
        self.heap: list[_Node] = []
        self.next_id = 0
        self.nodes = 0
        self.best_bound = -math.inf
        self.bound_trace: list[float] = []
        self.incumbent_trace: list[float] = []

    @property
    def incumbent_obj(self) -> float:
        v = self.state.incumbent_objective
        return math.inf if v is None else v

    def _key(self, bound: float, depth: int, node_id: int) -> tuple:
        if self.config.node_selection == "depth_first":
            return (-depth, bound, node_id)
        return (bound, node_id)

    def _push(self, lower, upper, lp, depth) -> None:
        node = _Node(self._key(lp.objective, depth, self.next_id), self.next_id, lower, upper, lp, depth)
        self.next_id += 1
        heapq.heappush(self.heap, node)

    def _solve(self, lower, upper, warm: TableauSnapshot | None, root: bool = False) -> LpResult:
        lp = solve_lp_relaxation(self.instance, lower, upper, warm_start=warm)
        if lp.status is LpStatus.NUMERIC_FAILURE and warm is not None:
            lp = solve_lp_relaxation(self.instance, lower, upper)
        self.state.record_lp(lp, root=root)
        return lp

    def _integral(self, lp: LpResult) -> bool:
        return candidate_set(lp, self.instance, self.config.integrality_tolerance).size == 0

    def _accept_solution(self, lp: LpResult) -> None:
        if lp.objective < self.incumbent_obj:
            x = lp.x.copy()
            ints = self.instance.integrality
            x[ints] = np.round(x[ints])
            self.state.record_solution(x, float(self.instance.c @ x))

    def _open_bound(self) -> float:
        if not self.heap:
            return self.incumbent_obj
        if self.config.node_selection == "best_bound":
            b = self.heap[0].lp.objective
        else:
            b = min(node.lp.objective for node in self.heap)
        return min(b, self.incumbent_obj)

    def _trace(self) -> None:
        if self.config.record_trace:
            self.bound_trace.append(self._open_bound())
            self.incumbent_trace.append(self.incumbent_obj)

    def run(self) -> BnbStats:
        start = time.monotonic()
        inst, cfg = self.instance, self.config
        reset = getattr(self.policy, "reset", None)
        if reset is not None:
            reset(inst, cfg)
        root = self._solve(inst.lower.copy(), inst.upper.copy(), None, root=True)
        if root.status is LpStatus.INFEASIBLE:
            return self._stats("infeasible", start, math.inf)
        if root.status is LpStatus.UNBOUNDED:
            return self._stats("unbounded", start, -math.inf)
        if not root.optimal:
            return self._stats("error", start, -math.inf)
        if self._integral(root):
            self._accept_solution(root)
        else:
            self._push(inst.lower.copy(), inst.upper.copy(), root, 0)
        self._trace()

        status = None
        while self.heap:
            if time.monotonic() - start >= cfg.time_limit:
                status = "time_limit"
                break
            if self.nodes >= cfg.node_limit:
                status = "node_limit"
                break
            node = heapq.heappop(self.heap)
            if node.lp.objective >= self.incumbent_obj - PRUNE_TOL:
                continue
            self._branch_node(node)
            self._trace()

        if status is None:
            if self.state.incumbent is None:
                return self._stats("infeasible", start, math.inf)
            return self._stats("optimal", start, self.incumbent_obj)
        return self._stats(status, start, self._open_bound())

    def _branch_node(self, node: _Node) -> None:
        inst, cfg = self.instance, self.config
        lp = node.lp
        cands = candidate_set(lp, inst, cfg.integrality_tolerance)
        ctx = NodeContext(inst, node.lower, node.upper, lp, self.state, self.static)
        var = int(self.policy.select(ctx, cands))
        self.static = ctx.static
        if var not in set(cands.tolist()):
            raise ContractViolation(f"policy returned {var}, not a candidate")
        self.state.record_basis(lp)
        self.state.branchings += 1
        xv = float(lp.x[var])
        frac = xv - math.floor(xv)
        (dlo, dup), (ulo, uup) = branch(node.lower, node.upper, var, xv, cfg.integrality_tolerance)
        warm = ctx.tableau() if cfg.warm_start else None
        for direction, lo, up in ((DOWN, dlo, dup), (UP, ulo, uup)):
            child = self._solve(lo, up, warm)
            self.nodes += 1
            if not child.optimal:
                update_search_state(self.state, var, direction, None, lp.objective, frac)
                continue
            cut = child.objective >= self.incumbent_obj - PRUNE_TOL
            update_search_state(self.state, var, direction, child, lp.objective, frac, cutoff=cut)
            if cut:
                continue
            if self._integral(child):
                self._accept_solution(child)
            else:
                self._push(lo, up, child, node.depth + 1)

    def _stats(self, status: str, start: float, bound: float) -> BnbStats:
        inc = self.state.incumbent_objective
        if status == "optimal":
            gap = 0.0
            bound = inc
        elif status == "infeasible":
            gap = 1.0
        else:
            gap = primal_dual_gap(inc, bound)
        return BnbStats(
            nodes=self.nodes,
            wall_time=time.monotonic() - start,
            incumbent_objective=inc,
            best_bound=bound,
            gap=gap,
            status=status,
            incumbent=None if self.state.incumbent is None else self.state.incumbent.copy(),
            lp_iterations=self.state.total_lp_iterations,
            bound_trace=self.bound_trace,
            incumbent_trace=self.incumbent_trace,
        )


def run_bnb(instance: MilpInstance, policy: BranchingPolicy, config: BnbConfig | None = None) -> BnbStats:
    """Solve ``instance`` to optimality (or a limit) branching with ``policy``."""
    return _Solver(instance, policy, config or BnbConfig()).run()
