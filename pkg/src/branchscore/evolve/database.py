"""Append-only program database split into islands.

Each record is one JSON line.  Island membership depends only on the set of
features a program reads, so re-parsing a stored program lands it in the
same island.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..dsl.parser import ScoreProgram, parse_program, serialize

SCHEMA_VERSION = 1


def island_of(used_features, island_count: int = 4) -> int:
    key = ",".join(str(i) for i in sorted(set(int(f) for f in used_features)))
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big") % island_count


@dataclass(frozen=True)
class ProgramRecord:
    id: int
    program: ScoreProgram
    theta: tuple
    cost: float
    subset_cost: float
    island: int
    parent: int | None
    iteration: int
    # logical timestamp (the iteration that produced the record), kept clock-free
    # so identical runs write identical bytes
    created_at: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "v": SCHEMA_VERSION,
            "id": self.id,
            "program": serialize(self.program),
            "theta": [float(t) for t in self.theta],
            "cost": self.cost,
            "subset_cost": None if math.isinf(self.subset_cost) else self.subset_cost,
            "island": self.island,
            "parent": self.parent,
            "iteration": self.iteration,
            "created_at": self.created_at,
        })

    @classmethod
    def from_json(cls, line: str) -> "ProgramRecord":
        d = json.loads(line)
        if d.get("v") != SCHEMA_VERSION:
            raise ValueError(f"unsupported record version {d.get('v')!r}")
        sub = d.get("subset_cost")
        return cls(
            id=int(d["id"]),
            program=parse_program(d["program"]),
            theta=tuple(float(t) for t in d["theta"]),
            cost=float(d["cost"]),
            subset_cost=math.inf if sub is None else float(sub),
            island=int(d["island"]),
            parent=d.get("parent"),
            iteration=int(d["iteration"]),
            created_at=int(d.get("created_at", d["iteration"])),
        )


@dataclass
class IslandDatabase:
    island_count: int = 4
    path: Path | None = None
    records: list[ProgramRecord] = field(default_factory=list)
    islands: dict[int, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        if self.island_count < 1:
            raise ValueError("island_count must be >= 1")
        self.path = None if self.path is None else Path(self.path)

    def __len__(self) -> int:
        return len(self.records)

    def _index(self, rec: ProgramRecord) -> None:
        self.records.append(rec)
        self.islands.setdefault(rec.island, []).append(rec.id)

    def add(self, program: ScoreProgram, theta, cost: float, subset_cost: float = math.inf,
            parent: int | None = None, iteration: int = 0) -> ProgramRecord:
        if not math.isfinite(cost):
            raise ValueError("only programs with finite cost are stored")
        rec = ProgramRecord(
            id=len(self.records),
            program=program,
            theta=tuple(float(t) for t in theta),
            cost=float(cost),
            subset_cost=float(subset_cost),
            island=island_of(program.used_features, self.island_count),
            parent=parent,
            iteration=iteration,
            created_at=iteration,
        )
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(rec.to_json() + "\n")
                fh.flush()
        self._index(rec)
        return rec

    def get(self, rid: int) -> ProgramRecord:
        return self.records[rid]

    def island_members(self, island: int) -> list[ProgramRecord]:
        return [self.records[i] for i in self.islands.get(island, [])]

    def best(self) -> ProgramRecord:
        return min(self.records, key=lambda r: (r.cost, r.id))

    @classmethod
    def load(cls, path, island_count: int = 4) -> "IslandDatabase":
        db = cls(island_count=island_count, path=path)
        p = Path(path)
        if p.exists():
            for n, line in enumerate(p.read_text().splitlines(), 1):
                if not line.strip():
                    continue
                rec = ProgramRecord.from_json(line)
                if rec.id != len(db.records):
                    raise ValueError(f"{p}:{n}: record id {rec.id} out of sequence")
                db._index(rec)
        return db
