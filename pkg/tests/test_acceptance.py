"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v`` (the lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

import csv
import json
import math
import shutil
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_log
import feature_fixture
import oracles
from stubs import StubEvaluator
from branchscore.bench import read_cells_csv, summary_path_for
from branchscore.cli import main as cli_main
from branchscore.dsl import BuiltinPolicy, ProgramPolicy, evaluate, library, parse_program, serialize
from branchscore.evolve import EvolutionConfig, IslandDatabase, LlmClientConfig, SolverEvaluator, evolve_loop
from branchscore.evolve import sample_parent
from branchscore.features import extract_features, normalize_per_node
from branchscore.instances import gen_set_cover, write_instance
from branchscore.metrics import shifted_geomean
from branchscore.milp import from_dense, solve_lp_relaxation
from branchscore.milp.bnb import BnbConfig, run_bnb
from branchscore.runner import PolicySpec
from branchscore.tuning import CostMetric, OptBudget, evaluate_cost, fast_filter, filter_verdict, optimize_params
from branchscore.tuning import baseline_nodes, tune_program

FIXTURES = Path(__file__).parent / "fixtures"
record = acceptance_log.record


def _geo(xs):
    # independent recomputation, deliberately not the package's helper
    return math.exp(sum(math.log(x + 1.0) for x in xs) / len(xs)) - 1.0


# 1 -------------------------------------------------------------------------


def test_criterion_01_oracle_equivalence():
    rng = np.random.default_rng(20240601)
    policies = ["most_fractional", "pseudocost", "random", "strong_branching", "reliability"]
    start = time.monotonic()
    worst, bad = 0.0, 0
    for k in range(100):
        inst = oracles.random_binary_milp(rng)
        stats = run_bnb(inst, BuiltinPolicy(policies[k % len(policies)], seed=k))
        ref = oracles.brute_force_milp(inst)
        err = abs(stats.incumbent_objective - ref)
        worst = max(worst, err)
        bad += stats.status != "optimal" or err > 1e-6
    elapsed = time.monotonic() - start
    ok = bad == 0 and elapsed < 30.0
    record(1, ok, f"100 random binary MILPs vs enumeration: {bad} mismatches, max err {worst:.1e}, "
                  f"{elapsed:.1f}s (limit 30s)")
    assert ok


# 2 -------------------------------------------------------------------------


def test_criterion_02_simplex():
    lp1 = solve_lp_relaxation(from_dense([-1.0], np.zeros((0, 1)), np.zeros(0), np.zeros(1), np.array([1.5]),
                                         np.zeros(1, bool)))
    lp2 = solve_lp_relaxation(from_dense([-1.0, -1.0], [[1.0, 1.0]], [1.0], np.zeros(2), np.ones(2),
                                         np.zeros(2, bool)))
    fixtures_ok = (
        abs(lp1.x[0] - 1.5) <= 1e-8 and abs(lp1.objective + 1.5) <= 1e-8 and abs(lp2.objective + 1.0) <= 1e-8
    )
    rng = np.random.default_rng(31337)
    worst, failures = 0.0, 0
    for _ in range(50):
        c, A, b, lo, up = oracles.random_lp(rng)
        status, _, ref = oracles.naive_simplex(c, A, b, lo, up)
        lp = solve_lp_relaxation(from_dense(c, A, b, lo, up, np.zeros(c.size, bool)))
        if status != "optimal" or not lp.optimal:
            failures += 1
            continue
        worst = max(worst, abs(lp.objective - ref))
    ok = fixtures_ok and failures == 0 and worst <= 1e-7
    record(2, ok, f"simplex fixtures {'match' if fixtures_ok else 'MISMATCH'} at 1e-8; "
                  f"50 random 10x20 LPs vs naive Bland oracle: max err {worst:.1e} (tol 1e-7)")
    assert ok


# 3 -------------------------------------------------------------------------


class _Recorder:
    """Most-fractional branching that checks the feature contract at every node."""

    def __init__(self):
        self.inner = BuiltinPolicy("most_fractional")
        self.matrices = 0
        self.violations = []

    def select(self, ctx, candidates):
        raw = extract_features(ctx, None, candidates)
        norm = normalize_per_node(raw).values
        if raw.values.shape != (len(candidates), 91):
            self.violations.append(f"shape {raw.values.shape}")
        if not np.all(np.isfinite(raw.values)):
            self.violations.append("non-finite")
        if norm.min() < 0.0 or norm.max() > 1.0:
            self.violations.append("normalized value outside [0, 1]")
        self.matrices += 1
        return self.inner.select(ctx, candidates)


def test_criterion_03_feature_contract():
    rec = _Recorder()
    for seed in range(10):
        run_bnb(gen_set_cover(150, 300, 0.05, seed=seed), rec, BnbConfig(node_limit=30))
    ctx, cand = feature_fixture.build_node()
    got = extract_features(ctx, None, cand).values[0]
    fixture_err = float(np.abs(got - feature_fixture.expected_vector()).max())
    ok = not rec.violations and rec.matrices >= 10 and fixture_err <= 1e-9
    record(3, ok, f"{rec.matrices} node matrices on 10 desk set covers, {len(rec.violations)} violations; "
                  f"hand-computed 91-vector max err {fixture_err:.1e} (tol 1e-9)")
    assert ok


# 4 -------------------------------------------------------------------------


def test_criterion_04_reference_programs():
    names = ["setcover", "cauctions", "facilities", "indset", "item_placement", "nnverify"]
    rng = np.random.default_rng(4)
    problems = []
    for name in names:
        p = parse_program(library.PROGRAMS[name])
        if parse_program(serialize(p)) != p:
            problems.append(f"{name}: round trip")
        for _ in range(1000):
            X = rng.uniform(0.0, 1.0, size=(int(rng.integers(1, 20)), 91))
            if not np.all(np.isfinite(evaluate(p, None, X, rng_key=(0, 0)))):
                problems.append(f"{name}: non-finite")
                break
    if library.load("setcover").params[1] != 0.5887010792086566:
        problems.append("setcover: printed parameter changed")
    X = np.zeros((1, 91))
    X[0, [9, 39, 40, 22, 7, 43]] = [0.5, 0.2, 0.2, 0.4, 0.1, 0.04]
    trace = abs(evaluate(library.load("cauctions"), None, X)[0] - 1.7829591043454342)
    if trace > 1e-9:
        problems.append(f"cauctions hand trace off by {trace:.1e}")
    ok = not problems
    record(4, ok, f"6 reference programs parse, round-trip and stay finite on 1000 random matrices each"
                  f"{'' if ok else ': ' + '; '.join(problems)}")
    assert ok


# 5 -------------------------------------------------------------------------


def test_criterion_05_metric_exactness(tmp_path):
    exact = shifted_geomean([1, 7], 1) == 3.0
    files = []
    for s in range(4):
        path = tmp_path / f"sc{s}.mip"
        write_instance(gen_set_cover(80, 160, 0.05, seed=s), path)
        files.append(str(path))
    out = tmp_path / "cells.csv"
    rc = cli_main(["bench", "--policies", "most_fractional,pseudocost,random", "--instances", *files,
                   "--out", str(out), "--quiet"])
    cells = read_cells_csv(out)
    with open(summary_path_for(out)) as fh:
        summary = list(csv.DictReader(fh))
    mismatches = 0
    for row in summary:
        mine = [c for c in cells if c.policy == row["policy"]]
        finished = [c for c in mine if c.status == "optimal"]
        checks = [
            (float(row["geomean_nodes"]), _geo([c.nodes for c in mine])),
            (float(row["geomean_time_s"]), _geo([c.time_s for c in mine])),
            (float(row["mean_gap"]), sum(c.gap for c in mine) / len(mine)),
            (int(row["cells"]), len(mine)),
            (int(row["finished"]), len(finished)),
        ]
        mismatches += sum(abs(a - b) > 1e-12 * max(1.0, abs(b)) for a, b in checks)
        wins = 0
        for c in finished:
            rivals = [d for d in cells if d.instance == c.instance and d.status == "optimal"]
            wins += c.time_s == min(d.time_s for d in rivals)
        mismatches += wins != int(row["wins"])
    ok = exact and rc == 0 and mismatches == 0 and len(cells) == 12
    record(5, ok, f"shifted_geomean({{1,7}},1) == 3 exactly: {exact}; bench summary vs recomputation "
                  f"from {len(cells)} cells: {mismatches} mismatches")
    assert ok


# 6 -------------------------------------------------------------------------


def test_criterion_06_filter_boundary():
    at = filter_verdict([100, 125], [100, 100])
    over = filter_verdict([100, 126], [100, 100])
    ok = at.passed and not over.passed and over.reason.startswith("nodes@1")
    record(6, ok, f"node ratio 1.25 passes: {at.passed}; 1.26 fails: {not over.passed} ({over.reason})")
    assert ok


# 7 -------------------------------------------------------------------------


def test_criterion_07_tuner():
    counts = [0, 0]

    def one(t):
        counts[0] += 1
        return float((t[0] - 0.3) ** 2)

    def two(t):
        counts[1] += 1
        return float(((t - np.array([0.2, 0.8])) ** 2).sum())

    r1 = optimize_params(one, [0.9], [(0.0, 1.0)], OptBudget(max_iterations=50, rng_seed=0))
    r2 = optimize_params(two, [0.5, 0.5], [(0.0, 1.0), (0.0, 1.0)], OptBudget(max_iterations=50, rng_seed=0))

    def monotone(r):
        b = r.best_so_far
        return all(y <= x for x, y in zip(b, b[1:])) and b[-1] == r.cost

    ok = (
        r1.cost <= 1e-2 and abs(r1.theta[0] - 0.3) <= 0.1 and r2.cost <= 5e-2
        and counts[0] <= 50 and counts[1] <= 50 and monotone(r1) and monotone(r2)
    )
    record(7, ok, f"1-D quadratic cost {r1.cost:.1e} in {counts[0]} evals (need <= 1e-2); "
                  f"2-D quadratic cost {r2.cost:.1e} in {counts[1]} evals (need <= 5e-2); monotone incumbent")
    assert ok


# 8 -------------------------------------------------------------------------


def _evolution_inputs():
    full = [gen_set_cover(80, 160, 0.05, seed=s) for s in range(6)]
    subset = full[:3]
    metric = CostMetric("nodes")
    budget = OptBudget(max_iterations=4, node_limit=5000, rng_seed=0)
    return full, subset, metric, budget


def _evolve(out_dir, iterations):
    full, subset, metric, budget = _evolution_inputs()
    config = EvolutionConfig(iterations=iterations, seed=0,
                             llm=LlmClientConfig(variant="scripted", fixture=str(FIXTURES / "scripted_solver.txt")))
    return evolve_loop(config, SolverEvaluator(full, subset, metric, budget, "reliability"), out_dir)


def _expected_costs():
    """Independent pass over the fixture programs: filter, tune, cost on the full set."""
    from branchscore.evolve.llm import ScriptedClient, parse_llm_response

    full, subset, metric, budget = _evolution_inputs()
    config = metric.solver_config(budget.solver_config())
    base = baseline_nodes(subset, config, "reliability")
    initial = library.load("initial")
    costs = {serialize(initial): evaluate_cost(initial, initial.params, full, metric, config)}
    client = ScriptedClient(FIXTURES / "scripted_solver.txt")
    for text in client.responses:
        prog = parse_llm_response(text)
        if not fast_filter(prog, prog.params, subset, base, config).passed:
            continue
        tuned = tune_program(prog, subset, metric, budget)
        if tuned.failed:
            continue
        costs[serialize(prog.with_params(tuned.theta))] = evaluate_cost(prog, tuned.theta, full, metric, config)
    return costs


def test_criterion_08_mock_evolution(tmp_path):
    best = _evolve(tmp_path / "a", 3)
    _evolve(tmp_path / "b", 3)
    files = ("programs.jsonl", "events.jsonl", "history.csv")
    identical = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)

    expected = _expected_costs()
    want = min(expected.values())
    known_best = best.cost == want and serialize(best.program) in {k for k, v in expected.items() if v == want}

    with open(tmp_path / "a" / "history.csv") as fh:
        curve = [float(r["best_cost"]) for r in csv.DictReader(fh)]
    nonincreasing = all(y <= x for x, y in zip(curve, curve[1:]))

    # kill after iteration 2 with iteration 3 half done, then resume
    _evolve(tmp_path / "c", 2)
    with open(tmp_path / "c" / "events.jsonl", "a") as fh:
        fh.write(json.dumps({"iteration": 3, "event": "generated", "parent": 0}) + "\n")
    _evolve(tmp_path / "c", 3)
    resumed = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "c" / f).read_bytes() for f in files)

    # constructed costs: the three scripted programs cost 30 > 20 > 10
    stub_cfg = EvolutionConfig(iterations=3, seed=0,
                               llm=LlmClientConfig(variant="scripted", fixture=str(FIXTURES / "scripted_three.txt")))
    stub_best = evolve_loop(stub_cfg, StubEvaluator(), tmp_path / "stub")
    stub_ok = stub_best.cost == 10.0 and len(IslandDatabase.load(tmp_path / "stub" / "programs.jsonl")) == 4

    ok = identical and known_best and nonincreasing and resumed and stub_ok
    record(8, ok, f"costs 30>20>10 script: best {stub_best.cost:g} with 4 records: {stub_ok}; "
                  f"solver-backed run: best cost {best.cost:g} (independent recomputation {want:g}), "
                  f"byte-identical reruns: {identical}, nonincreasing curve: {nonincreasing}, "
                  f"kill/resume identical: {resumed}")
    assert ok


# 9 and 10 ------------------------------------------------------------------


@pytest.fixture(scope="module")
def desk_suite():
    instances = [gen_set_cover(150, 300, 0.05, seed=s) for s in range(20)]
    out, elapsed = {}, {}
    policies = {
        "strong_branching": lambda: BuiltinPolicy("strong_branching"),
        "most_fractional": lambda: BuiltinPolicy("most_fractional"),
        "random": lambda: BuiltinPolicy("random", seed=0),
        "setcover": lambda: ProgramPolicy(library.load("setcover")),
    }
    for name, make in policies.items():
        start = time.monotonic()
        nodes = []
        for inst in instances:
            stats = run_bnb(inst, make())
            assert stats.status == "optimal"
            nodes.append(stats.nodes)
        elapsed[name] = time.monotonic() - start
        out[name] = _geo(nodes)
    return out, elapsed


def test_criterion_09_directional_quality(desk_suite):
    g, elapsed = desk_suite
    total = elapsed["strong_branching"] + elapsed["most_fractional"] + elapsed["random"]
    sb, mf, rnd = g["strong_branching"], g["most_fractional"], g["random"]
    ok = sb < mf < rnd and sb <= 0.5 * rnd and total < 600.0
    record(9, ok, f"geomean nodes on 20 desk set covers: strong_branching {sb:.2f} < most_fractional {mf:.2f} "
                  f"< random {rnd:.2f}; 0.5 x random = {0.5 * rnd:.2f}; {total:.0f}s (limit 600s)")
    assert ok


def test_criterion_10_discovered_policy(desk_suite):
    g, _ = desk_suite
    ok = g["setcover"] <= g["most_fractional"]
    record(10, ok, f"setcover program geomean nodes {g['setcover']:.2f} <= most_fractional "
                   f"{g['most_fractional']:.2f}")
    assert ok


# 11 ------------------------------------------------------------------------


def test_criterion_11_exploration_split():
    db = IslandDatabase(island_count=4)
    for name in ("initial", "setcover", "indset", "cauctions"):
        p = library.load(name)
        db.add(p, p.params, float(len(db) + 1))
    rng = np.random.default_rng(11)
    explore = sum(sample_parent(db, rng, 0.7)[1] == "explore" for _ in range(10_000))
    frac = explore / 10_000
    ok = 0.68 <= frac <= 0.72
    record(11, ok, f"exploration fraction over 10,000 seeded parent draws: {frac:.4f} (need [0.68, 0.72])")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
