"""Prompt text for the program-generation model."""

from __future__ import annotations

from dataclasses import dataclass

from ..dsl.parser import serialize
from ..features import feature_doc_rows
from .database import ProgramRecord

DSL_GRAMMAR = """\
spl/1
used_features: [i, j, ...]        # every feature index the program reads, ascending
params: [v0, v1, ...]             # initial parameter values
bounds: [[lo0, hi0], [lo1, hi1]]  # one explicit pair per parameter
score:
let NAME = EXPR                   # zero or more bindings, evaluated in order
return EXPR

EXPR is built from numbers, bound names, feature(i), param(k), random(),
+ - * / and unary minus, abs tanh exp sqrt log1p (one argument),
min max pow (two arguments) and clip(x, lo, hi).  Every operation is applied
elementwise over the candidate variables of the node."""

SYSTEM_TEMPLATE = """\
You write branching rules for a branch-and-bound solver for mixed-integer linear programs.
A branching rule is a score program: the solver evaluates it on every fractional
candidate variable at a node and branches on the candidate with the highest score.

Each candidate is described by 91 features.  Within a node every feature is
rescaled to [0, 1] across the candidates.  A program may read at most 10 features.

Answer with a program in the following language:

{grammar}

Header rules: used_features must list exactly the features the program reads;
params holds the tunable constants, which are later optimized inside their bounds;
bounds must spell out one [lo, hi] pair per parameter, so a form such as
[0, 1] * 10 is rejected.

Feature index:
{features}
"""

USER_TEMPLATE = """\
# Current program
metrics: {metrics}
```spl
{current_program}```

# Inspiration programs
Programs from the same island, chosen for low cost or for being unlike the current one:
{inspiration_programs}

# Task
Write a new score program that lowers the cost of the current one.  Return the
complete program, including the used_features, params and bounds header lines,
inside a single fenced code block.
"""


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str

    def messages(self) -> list[dict]:
        return [{"role": "system", "content": self.system}, {"role": "user", "content": self.user}]


def feature_docs() -> str:
    return "\n".join(f"{i}: {name} ({formula})" for i, name, formula in feature_doc_rows())


def format_cost(cost: float) -> str:
    return format(float(cost), ".6g")


def _inspiration_block(records: list[ProgramRecord]) -> str:
    if not records:
        return "(none)"
    parts = []
    for n, rec in enumerate(records, 1):
        parts.append(f"## Inspiration {n} (cost={format_cost(rec.cost)})\n```spl\n{serialize(rec.program)}```")
    return "\n\n".join(parts)


def build_prompt(parent: ProgramRecord, inspirations: list[ProgramRecord],
                 features: str | None = None, grammar: str = DSL_GRAMMAR) -> PromptBundle:
    system = SYSTEM_TEMPLATE.format(grammar=grammar, features=features if features is not None else feature_docs())
    program = parent.program.with_params(parent.theta) if parent.theta else parent.program
    user = USER_TEMPLATE.format(
        metrics=f"cost={format_cost(parent.cost)}",
        current_program=serialize(program),
        inspiration_programs=_inspiration_block(inspirations),
    )
    return PromptBundle(system, user)
