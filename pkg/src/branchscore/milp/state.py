from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .simplex import BasisStatus, LpResult

UP = "up"
DOWN = "down"


@dataclass
class SearchState:
    """Per-solve history read by the dynamic features.

    Pseudocosts are per-unit objective gains, accumulated separately for the
    two branching directions.
    """

    num_vars: int
    pc_up_sum: np.ndarray = field(init=False)
    pc_up_count: np.ndarray = field(init=False)
    pc_down_sum: np.ndarray = field(init=False)
    pc_down_count: np.ndarray = field(init=False)
    cutoff_up: np.ndarray = field(init=False)
    cutoff_down: np.ndarray = field(init=False)
    branch_up: np.ndarray = field(init=False)
    branch_down: np.ndarray = field(init=False)
    last_basic: np.ndarray = field(init=False)
    total_lp_iterations: int = 0
    incumbent: np.ndarray | None = None
    incumbent_objective: float | None = None
    solution_sum: np.ndarray = field(init=False)
    solution_count: int = 0
    branchings: int = 0

    def __post_init__(self):
        n = self.num_vars
        self.pc_up_sum = np.zeros(n)
        self.pc_up_count = np.zeros(n, dtype=np.int64)
        self.pc_down_sum = np.zeros(n)
        self.pc_down_count = np.zeros(n, dtype=np.int64)
        self.cutoff_up = np.zeros(n, dtype=np.int64)
        self.cutoff_down = np.zeros(n, dtype=np.int64)
        self.branch_up = np.zeros(n, dtype=np.int64)
        self.branch_down = np.zeros(n, dtype=np.int64)
        self.last_basic = np.zeros(n, dtype=np.int64)
        self.solution_sum = np.zeros(n)

    def pseudocost_up(self) -> np.ndarray:
        return np.divide(self.pc_up_sum, self.pc_up_count, out=np.zeros(self.num_vars), where=self.pc_up_count > 0)

    def pseudocost_down(self) -> np.ndarray:
        return np.divide(
            self.pc_down_sum, self.pc_down_count, out=np.zeros(self.num_vars), where=self.pc_down_count > 0
        )

    def historical_average(self) -> np.ndarray:
        if self.solution_count == 0:
            return np.zeros(self.num_vars)
        return self.solution_sum / self.solution_count

    def record_lp(self, lp: LpResult, root: bool = False) -> None:
        """Account LP iterations; at the root every variable counts as just seen."""
        self.total_lp_iterations += lp.iterations
        if root:
            self.last_basic[:] = self.total_lp_iterations

    def record_basis(self, lp: LpResult) -> None:
        basic = lp.basis_status == BasisStatus.BASIC
        self.last_basic[basic] = self.total_lp_iterations

    def record_solution(self, x: np.ndarray, objective: float) -> None:
        self.incumbent = x.copy()
        self.incumbent_objective = objective
        self.solution_sum += x
        self.solution_count += 1


def update_search_state(
    state: SearchState,
    var: int,
    direction: str,
    child_lp: LpResult | None,
    parent_obj: float,
    fractionality: float,
    cutoff: bool = False,
) -> None:
    """Fold one solved child into the pseudocost / cutoff statistics.

    ``child_lp`` of ``None`` or a non-optimal LP counts as infeasible.  A
    feasible child that is pruned by bound passes ``cutoff=True`` and updates
    both its pseudocost and its cutoff counter.
    """
    if direction not in (UP, DOWN):
        raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
    feasible = child_lp is not None and child_lp.optimal
    if direction == DOWN:
        state.branch_down[var] += 1
    else:
        state.branch_up[var] += 1
    if feasible:
        step = fractionality if direction == DOWN else 1.0 - fractionality
        gain = max(child_lp.objective - parent_obj, 0.0) / step
        if direction == DOWN:
            state.pc_down_sum[var] += gain
            state.pc_down_count[var] += 1
        else:
            state.pc_up_sum[var] += gain
            state.pc_up_count[var] += 1
    if not feasible or cutoff:
        if direction == DOWN:
            state.cutoff_down[var] += 1
        else:
            state.cutoff_up[var] += 1
