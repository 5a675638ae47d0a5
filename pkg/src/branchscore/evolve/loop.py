"""The discovery loop: sample, prompt, parse, filter, tune, evaluate, store.

All state lives in ``out_dir``:

* ``programs.jsonl`` - the program database (append-only)
* ``events.jsonl``   - one line per loop event
* ``history.csv``    - best cost so far and cumulative event counts per iteration
* ``state.json``     - last completed iteration, written after each one

A run that is killed resumes from these files and ends with the same
database as an uninterrupted run.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dsl import library
from ..dsl.parser import DslError, ScoreProgram
from ..milp.instance import MilpInstance
from ..tuning import CostMetric, FilterResult, OptBudget, OptResult, baseline_nodes, evaluate_cost, fast_filter, tune_program
from .database import IslandDatabase, ProgramRecord
from .llm import LlmClientConfig, LlmError, make_client, parse_llm_response, query_llm
from .prompts import build_prompt
from .sampling import sample_inspirations, sample_parent

log = logging.getLogger(__name__)

EVENT_KINDS = ("generated", "parse_reject", "filter_reject", "tuned", "evaluated", "llm_error")
HISTORY_HEADER = ["iteration", "best_cost", *EVENT_KINDS]


@dataclass
class EvolutionConfig:
    iterations: int = 200
    exploration_prob: float = 0.7
    inspirations_k: int = 4
    island_count: int = 4
    seed: int = 0
    llm: LlmClientConfig = field(default_factory=LlmClientConfig)

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 <= self.exploration_prob <= 1.0:
            raise ValueError("exploration_prob must lie in [0, 1]")

    @property
    def exploitation_prob(self) -> float:
        return 1.0 - self.exploration_prob


class SolverEvaluator:
    """Filter, tune and score programs by running branch-and-bound."""

    def __init__(self, full: list[MilpInstance], subset: list[MilpInstance], metric: CostMetric,
                 budget: OptBudget, baseline_policy: str = "reliability", workers: int = 1, seed: int = 0):
        if not full or not subset:
            raise ValueError("instance sets must be nonempty")
        self.full, self.subset = full, subset
        self.metric, self.budget = metric, budget
        self.baseline_policy = baseline_policy
        self.workers, self.seed = workers, seed
        self._baseline: list[int] | None = None

    @property
    def config(self):
        return self.metric.solver_config(self.budget.solver_config())

    def baseline(self) -> list[int]:
        if self._baseline is None:
            self._baseline = baseline_nodes(self.subset, self.config, self.baseline_policy, self.workers)
        return self._baseline

    def filter(self, program: ScoreProgram) -> FilterResult:
        return fast_filter(program, program.params, self.subset, self.baseline(), self.config, self.workers, self.seed)

    def tune(self, program: ScoreProgram) -> OptResult:
        return tune_program(program, self.subset, self.metric, self.budget, self.workers, self.seed)

    def cost(self, program: ScoreProgram, theta) -> float:
        return evaluate_cost(program, theta, self.full, self.metric, self.config, self.workers, self.seed)


class _Run:
    def __init__(self, config: EvolutionConfig, evaluator, out_dir, client=None):
        self.cfg = config
        self.ev = evaluator
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.db_path = self.out / "programs.jsonl"
        self.events_path = self.out / "events.jsonl"
        self.history_path = self.out / "history.csv"
        self.state_path = self.out / "state.json"
        self.db = IslandDatabase.load(self.db_path, config.island_count)
        self.completed = self._completed_iterations()
        self.events = self._load_events()
        self.client = client if client is not None else make_client(config.llm, start=self.completed)

    def _completed_iterations(self) -> int:
        done = 0
        if self.state_path.exists():
            done = int(json.loads(self.state_path.read_text())["iteration"])
        if self.db.records:
            done = max(done, max(r.iteration for r in self.db.records))
        return done

    def _load_events(self) -> list[dict]:
        events = []
        if self.events_path.exists():
            for line in self.events_path.read_text().splitlines():
                if line.strip():
                    e = json.loads(line)
                    if e["iteration"] <= self.completed:
                        events.append(e)
        # drop events of a half-finished iteration so the redo does not duplicate them
        self.events_path.write_text("".join(json.dumps(e) + "\n" for e in events))
        return events

    def emit(self, iteration: int, kind: str, **payload) -> None:
        e = {"iteration": iteration, "event": kind, **payload}
        self.events.append(e)
        with open(self.events_path, "a") as fh:
            fh.write(json.dumps(e) + "\n")

    def commit(self, iteration: int) -> None:
        tmp = self.state_path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"iteration": iteration}))
        os.replace(tmp, self.state_path)
        self.completed = iteration
        self.write_history()

    def write_history(self) -> None:
        counts = {k: 0 for k in EVENT_KINDS}
        by_iter: dict[int, list[dict]] = {}
        for e in self.events:
            by_iter.setdefault(e["iteration"], []).append(e)
        best = math.inf
        rows = []
        for t in range(self.completed + 1):
            for e in by_iter.get(t, []):
                counts[e["event"]] += 1
            costs = [r.cost for r in self.db.records if r.iteration == t]
            if costs:
                best = min(best, min(costs))
            rows.append([t, repr(best), *[counts[k] for k in EVENT_KINDS]])
        with open(self.history_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_HEADER)
            w.writerows(rows)

    def seed_database(self) -> None:
        if self.db.records:
            return
        program = library.load("initial")
        cost = self.ev.cost(program, program.params)
        if not math.isfinite(cost):
            raise RuntimeError("the initial program failed to evaluate on the full instance set")
        rec = self.db.add(program, program.params, cost, parent=None, iteration=0)
        self.emit(0, "evaluated", cost=cost, record=rec.id)
        self.commit(0)

    def iteration(self, t: int) -> None:
        rng = np.random.default_rng([self.cfg.seed, t])
        parent, mode = sample_parent(self.db, rng, self.cfg.exploration_prob)
        inspirations = sample_inspirations(self.db, parent, self.cfg.inspirations_k)
        prompt = build_prompt(parent, inspirations)
        try:
            text = query_llm(self.client, prompt)
        except LlmError as e:
            self.emit(t, "llm_error", error=str(e))
            return
        self.emit(t, "generated", parent=parent.id, mode=mode, inspirations=[r.id for r in inspirations])
        try:
            program = parse_llm_response(text)
        except DslError as e:
            self.emit(t, "parse_reject", error=str(e))
            return
        verdict = self.ev.filter(program)
        if not verdict.passed:
            self.emit(t, "filter_reject", reason=verdict.reason, nodes=verdict.nodes)
            return
        tuned = self.ev.tune(program)
        self.emit(t, "tuned", theta=[float(v) for v in tuned.theta], subset_cost=_num(tuned.cost),
                  trials=len(tuned.trials))
        if tuned.failed:
            return
        cost = self.ev.cost(program, tuned.theta)
        record = None
        if math.isfinite(cost):
            record = self.db.add(program.with_params(tuned.theta), tuned.theta, cost, tuned.cost,
                                 parent=parent.id, iteration=t).id
        self.emit(t, "evaluated", cost=_num(cost), record=record)

    def run(self) -> ProgramRecord:
        self.seed_database()
        for t in range(self.completed + 1, self.cfg.iterations + 1):
            try:
                self.iteration(t)
            except (LlmError, DslError, ArithmeticError, ValueError) as e:
                # a failure inside one iteration costs only that iteration
                log.warning("iteration %d failed: %s", t, e)
                self.emit(t, "llm_error" if isinstance(e, LlmError) else "parse_reject", error=str(e))
            self.commit(t)
        return self.db.best()


def _num(v: float):
    return None if not math.isfinite(v) else float(v)


def evolve_loop(config: EvolutionConfig, evaluator, out_dir, client=None) -> ProgramRecord:
    """Run (or resume) the discovery loop and return the lowest-cost record."""
    return _Run(config, evaluator, out_dir, client).run()
