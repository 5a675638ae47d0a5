"""Parent and inspiration sampling over the island database."""

from __future__ import annotations

import itertools
import math
import re

import numpy as np

from ..dsl.parser import serialize
from .database import IslandDatabase, ProgramRecord

_TOKEN = re.compile(r"[A-Za-z_]\w*|\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\S")
# past this many subsets the diverse pick falls back to greedy selection
_EXHAUSTIVE_LIMIT = 20_000


def sample_parent(db: IslandDatabase, rng: np.random.Generator, exploration_prob: float = 0.7):
    """Returns (record, mode) with mode "explore" or "exploit".

    Explore: uniform over all records.  Exploit: within the island with the
    lowest mean cost, record of rank r (0 = cheapest) out of n is drawn with
    weight n - r.
    """
    if not db.records:
        raise ValueError("cannot sample from an empty database")
    if rng.random() < exploration_prob:
        return db.records[int(rng.integers(len(db.records)))], "explore"
    means = {isl: np.mean([db.records[i].cost for i in ids]) for isl, ids in db.islands.items() if ids}
    island = min(means, key=lambda k: (means[k], k))
    members = sorted(db.island_members(island), key=lambda r: (r.cost, r.id))
    n = len(members)
    weights = np.arange(n, 0, -1, dtype=float)
    return members[int(rng.choice(n, p=weights / weights.sum()))], "exploit"


def tokens(text: str) -> list[str]:
    return _TOKEN.findall(text)


def edit_distance(a, b) -> int:
    """Levenshtein distance between two sequences."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def jaccard_distance(a, b) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 0.0
    return 1.0 - len(a & b) / len(a | b)


def diversity(a: ProgramRecord, b: ProgramRecord) -> float:
    """Normalized token edit distance of canonical sources plus feature-set Jaccard distance."""
    ta, tb = tokens(serialize(a.program)), tokens(serialize(b.program))
    denom = max(len(ta), len(tb), 1)
    return edit_distance(ta, tb) / denom + jaccard_distance(a.program.used_features, b.program.used_features)


def _spread(group, parent, div) -> float:
    total = sum(div(parent, r) for r in group)
    total += sum(div(x, y) for x, y in itertools.combinations(group, 2))
    return total


def sample_inspirations(db: IslandDatabase, parent: ProgramRecord, k: int = 4) -> list[ProgramRecord]:
    """ceil(k/2) cheapest island-mates, then floor(k/2) that maximize total
    pairwise diversity among themselves and the parent."""
    pool = [r for r in db.island_members(parent.island) if r.id != parent.id]
    pool.sort(key=lambda r: (r.cost, r.id))
    top = pool[: math.ceil(k / 2)]
    rest = pool[len(top):]
    want = min(k // 2, len(rest))
    if want == 0:
        return top
    cache: dict[tuple[int, int], float] = {}

    def div(x, y):
        key = (min(x.id, y.id), max(x.id, y.id))
        if key not in cache:
            cache[key] = diversity(x, y)
        return cache[key]

    if math.comb(len(rest), want) <= _EXHAUSTIVE_LIMIT:
        best, best_val = None, -math.inf
        for group in itertools.combinations(rest, want):
            val = _spread(group, parent, div)
            if val > best_val:
                best, best_val = list(group), val
        return top + best
    chosen: list[ProgramRecord] = []
    left = list(rest)
    while len(chosen) < want:
        pick = max(left, key=lambda r: (_spread(chosen + [r], parent, div), -r.id))
        chosen.append(pick)
        left.remove(pick)
    return top + chosen
