"""Expression tree for score programs.

Nodes are frozen dataclasses so two programs compare structurally with ``==``.
"""

from __future__ import annotations

from dataclasses import dataclass

UNARY_FUNCS = ("abs", "tanh", "exp", "sqrt", "log1p")
BINARY_FUNCS = ("min", "max", "pow")
BINARY_OPS = ("+", "-", "*", "/")


@dataclass(frozen=True)
class Feature:
    index: int


@dataclass(frozen=True)
class Param:
    index: int


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Random:
    """Uniform [0, 1) draw per candidate, keyed by the caller's node counter."""


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of UNARY_FUNCS
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # one of BINARY_OPS or BINARY_FUNCS
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Clip:
    operand: "Expr"
    lo: "Expr"
    hi: "Expr"


Expr = Feature | Param | Literal | Name | Random | Unary | Binary | Clip


def walk(expr: Expr):
    """Pre-order traversal."""
    yield expr
    if isinstance(expr, Unary):
        yield from walk(expr.operand)
    elif isinstance(expr, Binary):
        yield from walk(expr.left)
        yield from walk(expr.right)
    elif isinstance(expr, Clip):
        yield from walk(expr.operand)
        yield from walk(expr.lo)
        yield from walk(expr.hi)


def node_count(expr: Expr) -> int:
    return sum(1 for _ in walk(expr))
