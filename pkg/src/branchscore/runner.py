"""Run (policy, instance) solves, optionally across a process pool.

Results always come back in input order, whatever order workers finish in.
"""

from __future__ import annotations

import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dsl.parser import ScoreProgram
from .dsl.policies import BUILTIN_ALIASES, BUILTIN_NAMES, BuiltinPolicy, ProgramPolicy, make_policy
from .milp.bnb import BnbConfig, run_bnb
from .milp.instance import MilpInstance


@dataclass(frozen=True)
class PolicySpec:
    """Picklable recipe for a policy: a builtin/library name or a program with theta."""

    name: str
    program: ScoreProgram | None = None
    theta: tuple | None = None
    seed: int = 0

    def build(self):
        if self.program is not None:
            theta = None if self.theta is None else np.asarray(self.theta, dtype=float)
            return ProgramPolicy(self.program, theta, seed=self.seed)
        if self.name in BUILTIN_NAMES or self.name in BUILTIN_ALIASES:
            return BuiltinPolicy(self.name, seed=self.seed)
        return make_policy(self.name, seed=self.seed)


@dataclass
class CellResult:
    policy: str
    instance: str
    status: str
    nodes: int
    time_s: float
    gap: float
    objective: float | None = None
    error: str | None = None

    @property
    def finished(self) -> bool:
        return self.status == "optimal"


def solve_cell(spec: PolicySpec, instance: MilpInstance, config: BnbConfig, label: str | None = None) -> CellResult:
    """One solve; any exception is captured in the result instead of raised."""
    label = label or instance.name
    try:
        stats = run_bnb(instance, spec.build(), config)
    except Exception as e:  # isolate the failure to this cell
        return CellResult(spec.name, label, "error", 0, 0.0, 1.0, None,
                          f"{type(e).__name__}: {e}\n{traceback.format_exc(limit=3)}")
    return CellResult(spec.name, label, stats.status, stats.nodes, stats.wall_time, stats.gap,
                      stats.incumbent_objective)


def _solve_args(args):
    return solve_cell(*args)


def solve_cells(cells: list[tuple], workers: int = 1) -> list[CellResult]:
    """``cells`` holds (PolicySpec, MilpInstance, BnbConfig, label) tuples."""
    if workers <= 1 or len(cells) <= 1:
        return [solve_cell(*c) for c in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_args, cells))


def measure(cell: CellResult, kind: str) -> float:
    """Per-instance cost value for a metric kind; errors map to +inf."""
    if cell.status == "error":
        return math.inf
    if kind == "nodes":
        return float(cell.nodes)
    if kind == "gap":
        return float(cell.gap)
    if kind == "time":
        return float(cell.time_s)
    raise ValueError(f"unknown measure {kind!r}")
