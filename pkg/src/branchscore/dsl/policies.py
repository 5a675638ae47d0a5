"""Branching policies: score programs and the built-in reference rules."""

from __future__ import annotations

import numpy as np

from ..features import EPS, NodeContext, extract_features, normalize_per_node
from ..milp.simplex import LpStatus, solve_lp_relaxation
from ..milp.state import DOWN, UP, update_search_state
from .evaluate import evaluate, select_branch_variable
from .parser import ScoreProgram

INFEASIBLE_GAIN = 1e9
BUILTIN_NAMES = ("random", "most_fractional", "pseudocost", "strong_branching", "reliability")
# longer spellings accepted anywhere a builtin name is
BUILTIN_ALIASES = {"pseudocost_product": "pseudocost", "full_strong_branching": "strong_branching"}


def _uniform(seed: int, counter: int, k: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed, counter=[counter, 0, 0, 0]))
    return gen.random(k)


class ProgramPolicy:
    """Branch on the argmax of a score program over normalized features."""

    def __init__(self, program: ScoreProgram, theta=None, seed: int = 0):
        self.program = program
        self.theta = np.asarray(program.params if theta is None else theta, dtype=float)
        self.seed = seed
        self.name = "program"

    def reset(self, instance, config) -> None:
        pass

    def scores(self, ctx: NodeContext, candidates) -> np.ndarray:
        cols = self.program.used_features
        if cols:
            feats = normalize_per_node(extract_features(ctx, None, candidates, columns=cols))
            X = feats.values
        else:
            X = np.zeros((len(candidates), 91))
        return evaluate(self.program, self.theta, X, rng_key=(self.seed, ctx.state.branchings))

    def select(self, ctx: NodeContext, candidates) -> int:
        return select_branch_variable(self.scores(ctx, candidates), candidates)


class BuiltinPolicy:
    """One of the reference rules named in ``BUILTIN_NAMES``.

    ``reliability`` runs strong branching for the first ``warmup`` branchings
    of a solve and pseudocost-product scoring afterwards.
    """

    def __init__(self, kind: str, seed: int = 0, probe_iteration_limit: int = 500, warmup: int = 8):
        kind = BUILTIN_ALIASES.get(kind, kind)
        if kind not in BUILTIN_NAMES:
            raise ValueError(f"unknown builtin policy {kind!r}; choose from {', '.join(BUILTIN_NAMES)}")
        self.kind = kind
        self.name = kind
        self.seed = seed
        self.probe_iteration_limit = probe_iteration_limit
        self.warmup = warmup

    def reset(self, instance, config) -> None:
        pass

    def scores(self, ctx: NodeContext, candidates) -> np.ndarray:
        return builtin_score(self, ctx, candidates)

    def select(self, ctx: NodeContext, candidates) -> int:
        return select_branch_variable(self.scores(ctx, candidates), candidates)


def builtin_score(policy: BuiltinPolicy, ctx: NodeContext, candidates) -> np.ndarray:
    cand = np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        raise ValueError("candidate set is empty")
    kind = policy.kind
    if kind == "random":
        return _uniform(policy.seed, ctx.state.branchings, cand.size)
    frac = ctx.fractionality(cand)
    if kind == "most_fractional":
        return np.minimum(frac, 1.0 - frac)
    if kind == "pseudocost" or (kind == "reliability" and ctx.state.branchings >= policy.warmup):
        up = ctx.state.pseudocost_up()[cand]
        down = ctx.state.pseudocost_down()[cand]
        return np.maximum(up * (1.0 - frac), EPS) * np.maximum(down * frac, EPS)
    return strong_branching_scores(ctx, cand, policy.probe_iteration_limit)


def strong_branching_scores(ctx: NodeContext, cand: np.ndarray, iteration_limit: int = 500) -> np.ndarray:
    """Product of (eps-floored) objective gains of the two child LPs per candidate.

    Probe outcomes are folded into the pseudocost statistics.  A probe that
    fails numerically scores the candidate -inf.
    """
    inst, lp = ctx.instance, ctx.lp
    tab = ctx.tableau()
    parent = lp.objective
    incumbent = ctx.state.incumbent_objective
    scores = np.empty(cand.size)
    for k, j in enumerate(cand):
        xv = float(lp.x[j])
        frac = xv - np.floor(xv)
        gains = []
        failed = False
        for direction in (DOWN, UP):
            lo, up = ctx.lower, ctx.upper
            if direction == DOWN:
                up = up.copy()
                up[j] = np.floor(xv)
            else:
                lo = lo.copy()
                lo[j] = np.ceil(xv)
            child = solve_lp_relaxation(inst, lo, up, warm_start=tab, iteration_limit=iteration_limit, finalize=False)
            if child.optimal:
                gains.append(max(child.objective - parent, 0.0))
                cut = incumbent is not None and child.objective >= incumbent - 1e-9
                update_search_state(ctx.state, int(j), direction, child, parent, frac, cutoff=cut)
            elif child.status is LpStatus.INFEASIBLE:
                gains.append(INFEASIBLE_GAIN)
                update_search_state(ctx.state, int(j), direction, None, parent, frac)
            elif child.status is LpStatus.ITERATION_LIMIT:
                gains.append(0.0)
            else:
                failed = True
        scores[k] = -np.inf if failed else max(gains[0], EPS) * max(gains[1], EPS)
    return scores


def make_policy(spec: str, seed: int = 0):
    """Policy from a builtin name, a library program name, or a program file path."""
    from . import library

    if spec in BUILTIN_NAMES or spec in BUILTIN_ALIASES:
        return BuiltinPolicy(spec, seed=seed)
    if spec in library.PROGRAMS:
        return ProgramPolicy(library.load(spec), seed=seed)
    from pathlib import Path

    from .parser import parse_program

    path = Path(spec)
    if path.exists():
        return ProgramPolicy(parse_program(path.read_text()), seed=seed)
    raise ValueError(f"unknown policy {spec!r}")
