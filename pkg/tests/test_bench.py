import csv
import math

import numpy as np
import pytest

from branchscore.bench import (
    CELL_HEADER,
    compute_wins,
    read_cells_csv,
    run_benchmark,
    summarize,
    summary_path_for,
    write_cells_csv,
    write_summary_csv,
)
from branchscore.instances import gen_set_cover
from branchscore.metrics import shifted_geomean
from branchscore.milp.bnb import BnbConfig
from branchscore.runner import CellResult, PolicySpec, measure, solve_cell


def _geo(xs):
    # independent one-liner used as the recomputation oracle
    return math.exp(sum(math.log(x + 1) for x in xs) / len(xs)) - 1


def test_shifted_geomean_examples():
    assert shifted_geomean([1, 7], 1) == 3
    assert shifted_geomean([0], 1) == 0
    assert shifted_geomean([5], 1) == 5
    with pytest.raises(ValueError):
        shifted_geomean([])
    with pytest.raises(ValueError):
        shifted_geomean([-1.0])
    assert shifted_geomean([1.0, math.inf]) == math.inf


def _cell(policy, inst, t, status="optimal", nodes=1):
    return CellResult(policy, inst, status, nodes, t, 0.0)


def test_wins_rules():
    assert compute_wins([_cell("A", "i", 3.0), _cell("B", "i", 5.0)]) == {"A": 1, "B": 0}
    assert compute_wins([_cell("A", "i", 9.0), _cell("B", "i", 1.0, "time_limit")]) == {"A": 1, "B": 0}
    assert compute_wins([_cell("A", "i", 2.0), _cell("B", "i", 2.0)]) == {"A": 1, "B": 1}
    assert compute_wins([_cell("A", "i", 2.0, nodes=4), _cell("B", "i", 2.0, nodes=3)], "nodes") == {"A": 0, "B": 1}
    with pytest.raises(ValueError):
        compute_wins([_cell("A", "i", 1.0)])


def test_measure_maps_errors_to_inf():
    assert measure(_cell("A", "i", 1.0, "error"), "nodes") == math.inf
    assert measure(_cell("A", "i", 1.5, nodes=8), "nodes") == 8
    assert measure(_cell("A", "i", 1.5, nodes=8), "time") == 1.5


def test_solve_cell_isolates_failures():
    class Boom(PolicySpec):
        def build(self):
            raise RuntimeError("kaput")

    inst = gen_set_cover(20, 40, 0.15, seed=0)
    cell = solve_cell(Boom("boom"), inst, BnbConfig(), "x")
    assert cell.status == "error" and "kaput" in cell.error


@pytest.fixture(scope="module")
def tiny_suite():
    return [(f"sc{s}", gen_set_cover(30, 60, 0.1, seed=s)) for s in range(4)]


def test_benchmark_grid_and_aggregates(tmp_path, tiny_suite):
    specs = [PolicySpec("most_fractional"), PolicySpec("pseudocost")]
    report = run_benchmark(specs, tiny_suite, BnbConfig(), workers=2)
    assert len(report.cells) == 8
    assert [(c.policy, c.instance) for c in report.cells] == [
        (p.name, name) for p in specs for name, _ in tiny_suite
    ]
    path = tmp_path / "cells.csv"
    write_cells_csv(report.cells, path)
    write_summary_csv(report.summary, summary_path_for(path))
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CELL_HEADER == ["policy", "instance", "status", "nodes", "time_s", "gap"]
    cells = read_cells_csv(path)
    with open(summary_path_for(path)) as fh:
        summary = list(csv.DictReader(fh))
    for row in summary:
        mine = [c for c in cells if c.policy == row["policy"]]
        assert float(row["geomean_nodes"]) == pytest.approx(_geo([c.nodes for c in mine]), rel=1e-12)
        assert float(row["geomean_time_s"]) == pytest.approx(_geo([c.time_s for c in mine]), rel=1e-12)
        assert int(row["cells"]) == 4


def test_pseudocost_geomean_matches_logged_counts(tiny_suite):
    cells = [solve_cell(PolicySpec("pseudocost"), inst, BnbConfig(), name) for name, inst in tiny_suite]
    s = summarize(cells)[0]
    assert s.geomean_nodes == pytest.approx(_geo([c.nodes for c in cells]), rel=1e-12)


def test_node_columns_reproducible(tmp_path, tiny_suite):
    specs = [PolicySpec("random", seed=7), PolicySpec("most_fractional")]
    cols = []
    for k in range(2):
        report = run_benchmark(specs, tiny_suite, BnbConfig(), workers=1 + k)
        cols.append([c.nodes for c in report.cells])
    assert cols[0] == cols[1]
