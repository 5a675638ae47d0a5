"""Benchmark runs: every policy on every instance, then per-policy summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .metrics import shifted_geomean
from .milp.bnb import BnbConfig
from .milp.instance import MilpInstance
from .runner import CellResult, PolicySpec, solve_cells

CELL_HEADER = ["policy", "instance", "status", "nodes", "time_s", "gap"]
SUMMARY_HEADER = ["policy", "cells", "finished", "wins", "geomean_time_s", "geomean_nodes", "mean_gap"]


@dataclass
class PolicySummary:
    policy: str
    cells: int
    finished: int
    wins: int
    geomean_time_s: float
    geomean_nodes: float
    mean_gap: float

    def row(self) -> list:
        return [self.policy, self.cells, self.finished, self.wins,
                repr(self.geomean_time_s), repr(self.geomean_nodes), repr(self.mean_gap)]


@dataclass
class RunReport:
    cells: list[CellResult]
    summary: list[PolicySummary]


def compute_wins(cells: list[CellResult], criterion: str = "time") -> dict[str, int]:
    """Per instance, credit every finished policy tied at the best value.

    ``criterion`` is "time" or "nodes"; exact ties credit every tied policy.
    Unfinished cells never win.
    """
    if criterion not in ("time", "nodes"):
        raise ValueError(f"unknown win criterion {criterion!r}")
    policies = list(dict.fromkeys(c.policy for c in cells))
    if len(policies) < 2:
        raise ValueError("wins need at least two policies")
    wins = {p: 0 for p in policies}
    by_instance: dict[str, list[CellResult]] = {}
    for c in cells:
        by_instance.setdefault(c.instance, []).append(c)
    for group in by_instance.values():
        done = [c for c in group if c.finished]
        if not done:
            continue
        key = (lambda c: c.time_s) if criterion == "time" else (lambda c: c.nodes)
        best = min(key(c) for c in done)
        for c in done:
            if key(c) == best:
                wins[c.policy] += 1
    return wins


def summarize(cells: list[CellResult], criterion: str = "time") -> list[PolicySummary]:
    policies = list(dict.fromkeys(c.policy for c in cells))
    wins = compute_wins(cells, criterion) if len(policies) > 1 else {p: 0 for p in policies}
    out = []
    for p in policies:
        mine = [c for c in cells if c.policy == p]
        out.append(PolicySummary(
            policy=p,
            cells=len(mine),
            finished=sum(c.finished for c in mine),
            wins=wins[p],
            geomean_time_s=shifted_geomean([c.time_s for c in mine]),
            geomean_nodes=shifted_geomean([c.nodes for c in mine]),
            mean_gap=sum(c.gap for c in mine) / len(mine),
        ))
    return out


def run_benchmark(policies: list[PolicySpec], instances: list[tuple[str, MilpInstance]], config: BnbConfig,
                  workers: int = 1, criterion: str = "time") -> RunReport:
    """Cells come back policy-major in input order regardless of worker scheduling."""
    jobs = [(spec, inst, config, label) for spec in policies for label, inst in instances]
    cells = solve_cells(jobs, workers)
    return RunReport(cells, summarize(cells, criterion))


def write_cells_csv(cells: list[CellResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CELL_HEADER)
        for c in cells:
            w.writerow([c.policy, c.instance, c.status, c.nodes, repr(float(c.time_s)), repr(float(c.gap))])


def read_cells_csv(path) -> list[CellResult]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CELL_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [CellResult(p, i, s, int(n), float(t), float(g)) for p, i, s, n, t, g in reader]


def write_summary_csv(summary: list[PolicySummary], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for s in summary:
            w.writerow(s.row())


def format_summary(summary: list[PolicySummary]) -> str:
    lines = [f"{'policy':<20} {'finished':>9} {'wins':>5} {'time_s':>10} {'nodes':>10} {'gap':>8}"]
    for s in summary:
        lines.append(f"{s.policy:<20} {s.finished:>4}/{s.cells:<4} {s.wins:>5} "
                     f"{s.geomean_time_s:>10.3f} {s.geomean_nodes:>10.2f} {s.mean_gap:>8.4f}")
    return "\n".join(lines)


def summary_path_for(cells_path) -> Path:
    p = Path(cells_path)
    return p.with_name(p.stem + "_summary.csv")
