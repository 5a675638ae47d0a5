import json
import math
from pathlib import Path

import httpx
import numpy as np
import pytest

from branchscore.dsl import DslError, library, parse_program, serialize
from branchscore.evolve import (
    EvolutionConfig,
    IslandDatabase,
    LlmClientConfig,
    LlmError,
    LiveClient,
    ProgramRecord,
    ScriptedClient,
    build_prompt,
    diversity,
    edit_distance,
    evolve_loop,
    island_of,
    jaccard_distance,
    parse_llm_response,
    sample_inspirations,
    sample_parent,
)
from branchscore.evolve.prompts import PromptBundle
from branchscore.tuning import FilterResult
from stubs import INITIAL_COST, StubEvaluator

FIXTURES = Path(__file__).parent / "fixtures"
SCRIPTED = FIXTURES / "scripted_three.txt"
def _scripted_config(iterations, seed=0):
    return EvolutionConfig(iterations=iterations, seed=seed,
                           llm=LlmClientConfig(variant="scripted", fixture=str(SCRIPTED)))


def _record(rid, text, cost, island=0):
    p = parse_program(text)
    return ProgramRecord(rid, p, p.params, cost, math.inf, island, None, 0)


def _prog(body, feats=(), params=(0.5,)):
    bounds = ", ".join("[0, 1]" for _ in params)
    return (f"used_features: {list(feats)}\nparams: {list(params)}\nbounds: [{bounds}]\n"
            f"score:\nreturn {body}\n")


# --- database -------------------------------------------------------------


def test_island_assignment_is_stable():
    assert island_of([9, 0]) == island_of([0, 9, 9])
    assert 0 <= island_of([1, 2, 3], 7) < 7


def test_database_persists_and_reloads(tmp_path):
    path = tmp_path / "db.jsonl"
    db = IslandDatabase(path=path)
    p = library.load("setcover")
    db.add(p, p.params, 3.5, 2.0, parent=None, iteration=0)
    db.add(p, p.params, 2.5, parent=0, iteration=1)
    with pytest.raises(ValueError):
        db.add(p, p.params, math.inf)
    again = IslandDatabase.load(path)
    assert [r.to_json() for r in again.records] == [r.to_json() for r in db.records]
    assert again.best().id == 1


# --- sampling -------------------------------------------------------------


def test_single_record_is_always_the_parent():
    db = IslandDatabase()
    p = library.load("initial")
    db.add(p, p.params, 1.0)
    rng = np.random.default_rng(0)
    assert {sample_parent(db, rng)[0].id for _ in range(50)} == {0}


def test_exploitation_favours_cheapest():
    db = IslandDatabase(island_count=1)
    p = library.load("initial")
    for c in (10.0, 5.0, 20.0):
        db.add(p, p.params, c)
    rng = np.random.default_rng(1)
    counts = np.zeros(3)
    for _ in range(3000):
        rec, mode = sample_parent(db, rng, exploration_prob=0.0)
        assert mode == "exploit"
        counts[rec.id] += 1
    assert counts.argmax() == 1


def test_exploration_fraction():
    db = IslandDatabase()
    p = library.load("initial")
    db.add(p, p.params, 1.0)
    rng = np.random.default_rng(2025)
    explore = sum(sample_parent(db, rng, 0.7)[1] == "explore" for _ in range(10_000))
    assert 0.68 <= explore / 10_000 <= 0.72


def test_distances():
    assert edit_distance("kitten", "sitting") == 3
    assert jaccard_distance([], []) == 0.0
    assert jaccard_distance([1, 2], [2, 3]) == pytest.approx(2 / 3)
    a = _record(0, _prog("param(0)"), 1.0)
    b = _record(1, _prog("param(0)"), 2.0)
    assert diversity(a, b) == 0.0


def test_island_of_one_gives_no_inspirations():
    db = IslandDatabase(island_count=1)
    p = library.load("initial")
    rec = db.add(p, p.params, 1.0)
    assert sample_inspirations(db, rec, 4) == []


def test_diverse_pair_matches_brute_force():
    import itertools

    db = IslandDatabase(island_count=1)
    bodies = [
        ("param(0)", ()),
        ("param(0) + feature(9)", (9,)),
        ("param(0) * feature(9) * feature(37)", (9, 37)),
        ("tanh(feature(43)) - param(0)", (43,)),
        ("max(feature(0), feature(1)) / (1.0 + param(0))", (0, 1)),
        ("param(0) + 1.0", ()),
        ("clip(feature(22), 0.0, param(0))", (22,)),
    ]
    for k, (body, feats) in enumerate(bodies):
        p = parse_program(_prog(body, feats))
        db.add(p, p.params, float(k + 1))
    parent = db.get(0)
    got = sample_inspirations(db, parent, 4)
    cheap = [db.get(1), db.get(2)]
    assert got[:2] == cheap
    rest = [db.get(i) for i in range(3, 7)]
    best = max(
        itertools.combinations(rest, 2),
        key=lambda g: diversity(parent, g[0]) + diversity(parent, g[1]) + diversity(g[0], g[1]),
    )
    assert [r.id for r in got[2:]] == [r.id for r in best]


# --- prompts --------------------------------------------------------------


def test_prompt_sections():
    parent = _record(0, library.PROGRAMS["setcover"], 3.21)
    bundle = build_prompt(parent, [])
    assert "cost=3.21" in bundle.user
    assert "(none)" in bundle.user
    assert [m["role"] for m in bundle.messages()] == ["system", "user"]


def test_prompt_golden_file():
    parent = _record(0, library.PROGRAMS["cauctions"], 12.5)
    insp = [_record(1, library.PROGRAMS["indset"], 14.0), _record(2, library.PROGRAMS["initial"], 20.25)]
    bundle = build_prompt(parent, insp, features="0: obj_coef (c_j)\n9: lp_frac (x*_j - floor(x*_j))")
    golden = (FIXTURES / "prompt_golden.txt").read_text()
    assert bundle.system + "\n=====\n" + bundle.user == golden


# --- model clients --------------------------------------------------------


def test_scripted_client_in_order():
    client = ScriptedClient(SCRIPTED)
    prompt = PromptBundle("s", "u")
    got = [parse_llm_response(client.complete(prompt)).params for _ in range(3)]
    assert got == [(30.0,), (20.0,), (10.0,)]
    with pytest.raises(LlmError):
        client.complete(prompt)


def _live(handler, retries=3):
    cfg = LlmClientConfig(endpoint="https://llm.test/v1/chat/completions", retries=retries, backoff=0.5)
    sleeps = []
    return LiveClient(cfg, transport=httpx.MockTransport(handler), sleep=sleeps.append), sleeps


def test_retry_after_server_errors():
    calls = []

    def handler(request):
        calls.append(json.loads(request.content))
        if len(calls) <= 2:
            return httpx.Response(500)
        return httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})

    client, sleeps = _live(handler)
    assert client.complete(PromptBundle("s", "u")) == "ok"
    assert len(calls) == 3 and sleeps == [0.5, 1.0]
    assert calls[0]["temperature"] == 0.7 and calls[0]["top_p"] == 0.95
    assert calls[0]["messages"][1] == {"role": "user", "content": "u"}


def test_timeouts_exhaust_retries():
    def handler(request):
        raise httpx.ReadTimeout("slow", request=request)

    client, sleeps = _live(handler, retries=2)
    with pytest.raises(LlmError, match="3 attempts"):
        client.complete(PromptBundle("s", "u"))
    assert len(sleeps) == 2


def test_malformed_body_is_an_llm_error():
    client, _ = _live(lambda r: httpx.Response(200, json={"nope": 1}))
    with pytest.raises(LlmError, match="malformed"):
        client.complete(PromptBundle("s", "u"))


def test_parse_llm_response_rules():
    one = "Some prose.\n```spl\n" + _prog("param(0)") + "```\n"
    assert parse_llm_response(one).params == (0.5,)
    two = one + "\nBetter:\n```\n" + _prog("param(0)", params=(0.25,)) + "```"
    assert parse_llm_response(two).params == (0.25,)
    with pytest.raises(DslError, match="no fenced"):
        parse_llm_response("just words")
    no_bounds = "```\nused_features: []\nparams: [0.5]\nscore:\nreturn param(0)\n```"
    with pytest.raises(DslError, match="bounds arity"):
        parse_llm_response(no_bounds)


# --- the loop -------------------------------------------------------------


def test_scripted_run_finds_cheapest(tmp_path):
    best = evolve_loop(_scripted_config(3), StubEvaluator(), tmp_path)
    assert best.cost == 10.0
    db = IslandDatabase.load(tmp_path / "programs.jsonl")
    assert len(db) == 4
    rows = (tmp_path / "history.csv").read_text().splitlines()
    assert rows[0] == "iteration,best_cost,generated,parse_reject,filter_reject,tuned,evaluated,llm_error"
    best_col = [float(r.split(",")[1]) for r in rows[1:]]
    assert best_col == [40.0, 30.0, 20.0, 10.0]


def test_zero_iterations_returns_initial(tmp_path):
    best = evolve_loop(_scripted_config(0), StubEvaluator(), tmp_path)
    assert best.id == 0 and best.cost == INITIAL_COST


def test_runs_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        evolve_loop(_scripted_config(3, seed=4), StubEvaluator(), tmp_path / name)
    for f in ("programs.jsonl", "events.jsonl", "history.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_resume_matches_uninterrupted(tmp_path):
    evolve_loop(_scripted_config(3), StubEvaluator(), tmp_path / "full")
    part = tmp_path / "part"
    evolve_loop(_scripted_config(2), StubEvaluator(), part)
    # a crash partway through iteration 3 leaves a stray event behind
    with open(part / "events.jsonl", "a") as fh:
        fh.write(json.dumps({"iteration": 3, "event": "generated", "parent": 0}) + "\n")
    evolve_loop(_scripted_config(3), StubEvaluator(), part)
    for f in ("programs.jsonl", "events.jsonl", "history.csv"):
        assert (part / f).read_bytes() == (tmp_path / "full" / f).read_bytes()


def test_llm_failure_skips_iteration(tmp_path):
    class Down:
        def complete(self, prompt):
            raise LlmError("timed out")

    evolve_loop(_scripted_config(2), StubEvaluator(), tmp_path, client=Down())
    assert len(IslandDatabase.load(tmp_path / "programs.jsonl")) == 1
    events = [json.loads(l)["event"] for l in (tmp_path / "events.jsonl").read_text().splitlines()]
    assert events.count("llm_error") == 2


def test_filter_rejection_is_logged(tmp_path):
    class Picky(StubEvaluator):
        def filter(self, program):
            if program.used_features == (9,):
                return FilterResult(False, "nodes@0: 200 > 1.25 x 100")
            return FilterResult(True)

    best = evolve_loop(_scripted_config(3), Picky(), tmp_path)
    assert best.cost == 10.0
    assert len(IslandDatabase.load(tmp_path / "programs.jsonl")) == 3
    events = [json.loads(l) for l in (tmp_path / "events.jsonl").read_text().splitlines()]
    assert [e["iteration"] for e in events if e["event"] == "filter_reject"] == [2]
