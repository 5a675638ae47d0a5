"""Fast filtering and parameter tuning of score programs.

A candidate program first has to stay within 125% of the baseline node
count on every instance of the tuning subset.  Survivors get their
parameters tuned by a seeded two-stage search: a scrambled Halton design
over the bounds, then bounded Nelder-Mead restarted around the incumbent.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .dsl.parser import ScoreProgram
from .metrics import shifted_geomean
from .milp.bnb import BnbConfig
from .milp.instance import MilpInstance
from .runner import CellResult, PolicySpec, measure, solve_cells

log = logging.getLogger(__name__)

FILTER_RATIO = 1.25
# stand-in for +inf inside Nelder-Mead, which needs comparable finite values
_NM_PENALTY = 1e300


@dataclass(frozen=True)
class CostMetric:
    kind: str = "nodes"  # nodes | gap | time
    time_limit: float | None = None
    shift: float = 1.0

    def __post_init__(self):
        if self.kind not in ("nodes", "gap", "time"):
            raise ValueError(f"unknown metric {self.kind!r}")
        if self.kind == "gap" and not (self.time_limit and self.time_limit > 0):
            raise ValueError("the gap metric needs a positive time_limit")

    def solver_config(self, base: BnbConfig) -> BnbConfig:
        if self.kind == "gap":
            return BnbConfig(**{**base.__dict__, "time_limit": self.time_limit})
        return base


@dataclass(frozen=True)
class OptBudget:
    max_iterations: int = 50
    node_limit: int = 100_000
    time_limit: float = 3600.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def solver_config(self) -> BnbConfig:
        return BnbConfig(node_limit=self.node_limit, time_limit=self.time_limit, rng_seed=self.rng_seed)


@dataclass
class TrialRecord:
    theta: np.ndarray
    cost: float
    per_instance: list = field(default_factory=list)


@dataclass
class OptResult:
    theta: np.ndarray
    cost: float
    trials: list[TrialRecord]
    failed: bool = False

    @property
    def best_so_far(self) -> list[float]:
        return list(np.minimum.accumulate([t.cost for t in self.trials]))


def evaluate_detailed(program: ScoreProgram, theta, instances: list[MilpInstance], metric: CostMetric,
                      config: BnbConfig, workers: int = 1, seed: int = 0) -> tuple[float, list[CellResult]]:
    if not instances:
        raise ValueError("evaluate_cost needs at least one instance")
    theta = program.params if theta is None else theta
    spec = PolicySpec("candidate", program, tuple(float(v) for v in np.asarray(theta, dtype=float)), seed)
    cfg = metric.solver_config(config)
    cells = solve_cells([(spec, inst, cfg, inst.name or f"i{k}") for k, inst in enumerate(instances)], workers)
    values = [measure(c, metric.kind) for c in cells]
    if any(math.isinf(v) for v in values):
        return math.inf, cells
    return shifted_geomean(values, metric.shift), cells


def evaluate_cost(program: ScoreProgram, theta, instances, metric: CostMetric, config: BnbConfig,
                  workers: int = 1, seed: int = 0) -> float:
    """Shifted geometric mean of the per-instance measure; +inf if any solve errors."""
    return evaluate_detailed(program, theta, instances, metric, config, workers, seed)[0]


@dataclass
class FilterResult:
    passed: bool
    reason: str = ""
    nodes: list = field(default_factory=list)


def filter_verdict(candidate_nodes, baseline_nodes, ratio: float = FILTER_RATIO) -> FilterResult:
    """Worst-case rule: every instance must satisfy candidate <= ratio * baseline.

    A candidate entry of None marks an evaluation error on that instance.
    """
    for i, (c, b) in enumerate(zip(candidate_nodes, baseline_nodes)):
        if c is None:
            return FilterResult(False, f"eval_error@{i}", list(candidate_nodes))
        if c > ratio * b:
            return FilterResult(False, f"nodes@{i}: {c} > {ratio} x {b}", list(candidate_nodes))
    return FilterResult(True, "", list(candidate_nodes))


def baseline_nodes(instances, config: BnbConfig, baseline: str = "reliability", workers: int = 1) -> list[int]:
    cells = solve_cells([(PolicySpec(baseline), inst, config, inst.name) for inst in instances], workers)
    return [c.nodes for c in cells]


def fast_filter(program: ScoreProgram, theta0, subset, baseline: list[int], config: BnbConfig,
                workers: int = 1, seed: int = 0) -> FilterResult:
    spec = PolicySpec("candidate", program, tuple(float(v) for v in theta0), seed)
    cells = solve_cells([(spec, inst, config, inst.name) for inst in subset], workers)
    nodes = [None if c.status == "error" else c.nodes for c in cells]
    return filter_verdict(nodes, baseline)


def _clamp(theta, lo, hi):
    return np.minimum(np.maximum(theta, lo), hi)


class _BudgetExhausted(Exception):
    pass


def optimize_params(objective: Callable[[np.ndarray], float | tuple], theta0, bounds, budget: OptBudget) -> OptResult:
    """Minimize a black-box ``objective`` within box ``bounds`` using at most
    ``budget.max_iterations`` evaluations.

    Trial 1 is ``theta0``; trials up to ceil(T/2) come from a scrambled Halton
    design; the rest run bounded Nelder-Mead from the incumbent with an
    initial simplex of +-10% of each bound range.  ``objective`` may return a
    cost or (cost, per-instance details).
    """
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    lo, hi = bounds[:, 0], bounds[:, 1]
    d = lo.size
    T = budget.max_iterations
    trials: list[TrialRecord] = []
    best = [math.inf, None]

    def f(theta) -> float:
        if len(trials) >= T:
            raise _BudgetExhausted
        theta = _clamp(np.asarray(theta, dtype=float), lo, hi)
        out = objective(theta.copy())
        cost, detail = (out if isinstance(out, tuple) else (out, []))
        cost = float(cost)
        if math.isnan(cost):
            cost = math.inf
        trials.append(TrialRecord(theta, cost, list(detail)))
        if cost < best[0]:
            best[0], best[1] = cost, theta
        return cost

    theta0 = _clamp(np.asarray(theta0, dtype=float), lo, hi)
    f(theta0)
    if d > 0:
        try:
            n_fill = math.ceil(T / 2) - 1
            if n_fill > 0:
                design = qmc.Halton(d, scramble=True, seed=budget.rng_seed).random(n_fill)
                for u in design:
                    f(lo + u * (hi - lo))
            step = 0.1 * (hi - lo)
            while len(trials) < T and np.any(step > 1e-9 * np.maximum(hi - lo, 1.0)):
                start_cost = best[0]
                x0 = best[1] if best[1] is not None else theta0
                simplex = [x0]
                for i in range(d):
                    v = x0.copy()
                    v[i] = v[i] + step[i] if v[i] + step[i] <= hi[i] else v[i] - step[i]
                    simplex.append(v)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    minimize(
                        lambda t: min(f(t), _NM_PENALTY),
                        x0,
                        method="Nelder-Mead",
                        bounds=list(zip(lo, hi)),
                        options={"initial_simplex": np.array(simplex), "maxfev": T - len(trials),
                                 "xatol": 1e-6, "fatol": 1e-9},
                    )
                if not best[0] < start_cost:
                    step = step / 2.0
        except _BudgetExhausted:
            pass
    if best[1] is None:
        return OptResult(theta0, math.inf, trials, failed=True)
    # strict improvements only, so a constant objective keeps theta0
    return OptResult(best[1], best[0], trials)


def tune_program(program: ScoreProgram, subset, metric: CostMetric, budget: OptBudget,
                 workers: int = 1, seed: int = 0) -> OptResult:
    config = budget.solver_config()

    def objective(theta):
        cost, cells = evaluate_detailed(program, theta, subset, metric, config, workers, seed)
        return cost, [measure(c, metric.kind) for c in cells]

    return optimize_params(objective, program.params, program.bounds, budget)


def write_trials_csv(result: OptResult, path, instance_names=None) -> None:
    d = len(result.trials[0].theta) if result.trials else 0
    k = max((len(t.per_instance) for t in result.trials), default=0)
    names = list(instance_names or [f"instance_{i}" for i in range(k)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", *[f"theta_{i}" for i in range(d)], "cost", *[f"measure_{n}" for n in names]])
        for i, t in enumerate(result.trials, 1):
            w.writerow([i, *[repr(float(v)) for v in t.theta], repr(t.cost), *[repr(float(v)) for v in t.per_instance]])
