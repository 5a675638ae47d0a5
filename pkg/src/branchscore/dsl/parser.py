"""Parser, validator and canonical printer for score programs.

Grammar (``#`` starts a comment; newlines inside brackets are ignored)::

    program    := ["spl/1"] header* "score" ":" binding* "return" expr
    header     := key (":" | "=") list          key in used_features, params, bounds
    binding    := "let" NAME "=" expr
    expr       := term (("+" | "-") term)*
    term       := factor (("*" | "/") factor)*
    factor     := "-" factor | atom
    atom       := NUMBER | NAME | "(" expr ")"
                | "feature" "(" INT ")" | "param" "(" INT ")" | "random" "(" ")"
                | UNARY "(" expr ")"              abs tanh exp sqrt log1p
                | BINARY "(" expr "," expr ")"    min max pow
                | "clip" "(" expr "," expr "," expr ")"

``bounds`` must spell out one ``[lo, hi]`` pair per parameter; list
arithmetic such as ``[0, 1] * 3`` is a syntax error.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .ast import (
    BINARY_FUNCS,
    UNARY_FUNCS,
    Binary,
    Clip,
    Expr,
    Feature,
    Literal,
    Name,
    Param,
    Random,
    Unary,
    walk,
)

log = logging.getLogger(__name__)

VERSION = "spl/1"
NUM_FEATURES = 91
MAX_FEATURES = 10
RESERVED = {"let", "return", "score", "feature", "param", "random", "clip", *UNARY_FUNCS, *BINARY_FUNCS}


class DslError(ValueError):
    """Any problem turning text into a valid program."""


class DslSyntaxError(DslError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class DslValidationError(DslError):
    pass


@dataclass(frozen=True)
class ScoreProgram:
    used_features: tuple[int, ...]
    params: tuple[float, ...]
    bounds: tuple[tuple[float, float], ...]
    bindings: tuple[tuple[str, Expr], ...]
    result: Expr
    clamped: bool = field(default=False, compare=False)

    @property
    def source_text(self) -> str:
        return serialize(self)

    def with_params(self, params) -> "ScoreProgram":
        return ScoreProgram(
            self.used_features, tuple(float(p) for p in params), self.bounds, self.bindings, self.result
        )

    def referenced_features(self) -> set[int]:
        found = set()
        for _, expr in self.bindings:
            found.update(n.index for n in walk(expr) if isinstance(n, Feature))
        found.update(n.index for n in walk(self.result) if isinstance(n, Feature))
        return found

    def uses_random(self) -> bool:
        exprs = [e for _, e in self.bindings] + [self.result]
        return any(isinstance(n, Random) for e in exprs for n in walk(e))


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[()\[\],:=+\-*/])
  | (?P<version>spl/\d+)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, line_start, depth = 1, 0, 0
    pos = 0
    while pos < len(text):
        if not toks and text.startswith("spl/", pos):
            m = re.compile(r"spl/\d+").match(text, pos)
            kind = "version"
        else:
            m = _TOKEN_RE.match(text, pos)
            kind = m.lastgroup if m else None
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        col = pos - line_start + 1
        s = m.group(0)
        if kind == "newline":
            if depth == 0 and toks and toks[-1].kind != "newline":
                toks.append(_Tok("newline", s, line, col))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            if s in "([":
                depth += 1
            elif s in ")]":
                depth = max(depth - 1, 0)
            toks.append(_Tok(kind, s, line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None) -> DslSyntaxError:
        tok = tok or self.tok
        return DslSyntaxError(msg, tok.line, tok.col)

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise self.error(f"expected {text!r}, found {found}")
        return self.next()

    def skip_newlines(self) -> None:
        while self.tok.kind == "newline":
            self.i += 1

    def end_of_line(self) -> None:
        if self.tok.kind not in ("newline", "eof"):
            raise self.error(f"unexpected {self.tok.text!r} at end of line")
        self.skip_newlines()

    # header lists

    def number(self) -> float:
        sign = 1.0
        if self.accept("-"):
            sign = -1.0
        elif self.accept("+"):
            pass
        t = self.tok
        if t.kind != "number":
            raise self.error(f"expected a number, found {t.text!r}")
        self.i += 1
        return sign * float(t.text)

    def number_list(self) -> list[float]:
        self.expect("[")
        out = []
        if not self.accept("]"):
            while True:
                out.append(self.number())
                if self.accept("]"):
                    break
                self.expect(",")
                if self.accept("]"):
                    break
        return out

    def pair_list(self) -> list[tuple[float, float]]:
        self.expect("[")
        out = []
        if self.accept("]"):
            return out
        while True:
            if self.tok.text != "[":
                raise self.error("bounds must be a list of [lo, hi] pairs, one per parameter")
            tok = self.tok
            pair = self.number_list()
            if len(pair) != 2:
                raise self.error(f"bound needs exactly two numbers, got {len(pair)}", tok)
            out.append((pair[0], pair[1]))
            if self.accept("]"):
                break
            self.expect(",")
            if self.accept("]"):
                break
        return out

    def program(self):
        self.skip_newlines()
        if self.tok.kind == "version":
            if self.tok.text != VERSION:
                raise self.error(f"unsupported version {self.tok.text!r}")
            self.next()
            self.end_of_line()
        headers: dict[str, object] = {}
        while self.tok.kind == "name" and self.tok.text.lower() in ("used_features", "params", "bounds"):
            key_tok = self.next()
            key = key_tok.text.lower()
            if key in headers:
                raise self.error(f"duplicate {key} header", key_tok)
            if not (self.accept(":") or self.accept("=")):
                raise self.error(f"expected ':' after {key}")
            if key == "bounds":
                headers[key] = self.pair_list()
            else:
                vals = self.number_list()
                headers[key] = vals
            self.end_of_line()
        if self.tok.text != "score":
            raise self.error("expected 'score:' block after the headers")
        self.next()
        self.expect(":")
        self.end_of_line()
        bindings = []
        while self.tok.text == "let":
            self.next()
            name_tok = self.tok
            if name_tok.kind != "name" or name_tok.text in RESERVED:
                raise self.error(f"invalid binding name {name_tok.text!r}")
            self.next()
            self.expect("=")
            bindings.append((name_tok.text, self.expr(), name_tok))
            self.end_of_line()
        if self.tok.text != "return":
            raise self.error("expected 'let' or 'return'")
        self.next()
        result = self.expr()
        self.end_of_line()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after return")
        return headers, bindings, result

    # expressions

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.next().text
            left = Binary(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.next().text
            left = Binary(op, left, self.factor())
        return left

    def factor(self) -> Expr:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.next()
            if self.tok.kind == "number":
                return Literal(-float(self.next().text))
            return Unary("neg", self.factor())
        return self.atom()

    def index_arg(self) -> int:
        self.expect("(")
        t = self.tok
        if t.kind != "number" or not re.fullmatch(r"\d+", t.text):
            raise self.error("expected a non-negative integer index")
        self.next()
        self.expect(")")
        return int(t.text)

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.next()
            return Literal(float(t.text))
        if t.kind == "op" and t.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "name":
            found = "end of input" if t.kind in ("eof", "newline") else repr(t.text)
            raise self.error(f"expected an expression, found {found}")
        self.next()
        name = t.text
        if name == "feature":
            idx = self.index_arg()
            if idx >= NUM_FEATURES:
                raise DslValidationError(f"feature index {idx} out of range [0, {NUM_FEATURES - 1}]")
            return Feature(idx)
        if name == "param":
            return Param(self.index_arg())
        if name == "random":
            self.expect("(")
            self.expect(")")
            return Random()
        if name in UNARY_FUNCS:
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Unary(name, e)
        if name in BINARY_FUNCS:
            self.expect("(")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            return Binary(name, a, b)
        if name == "clip":
            self.expect("(")
            a = self.expr()
            self.expect(",")
            lo = self.expr()
            self.expect(",")
            hi = self.expr()
            self.expect(")")
            return Clip(a, lo, hi)
        if name in RESERVED:
            raise self.error(f"reserved word {name!r} cannot be used here", t)
        if self.tok.text == "(":
            raise self.error(f"unknown function {name!r}", t)
        return Name(name)


def parse_program(text: str) -> ScoreProgram:
    """Parse and validate program text; out-of-bounds initial params are clamped."""
    headers, raw_bindings, result = _Parser(text).program()
    for key in ("used_features", "params"):
        if key not in headers:
            raise DslValidationError(f"missing {key!r} header")
    params = [float(v) for v in headers["params"]]
    if "bounds" not in headers:
        raise DslValidationError(
            f"bounds arity mismatch: missing 'bounds' header for {len(params)} params"
        )
    bounds = headers["bounds"]
    if len(bounds) != len(params):
        raise DslValidationError(f"bounds arity mismatch: {len(bounds)} bounds for {len(params)} params")
    for lo, hi in bounds:
        if not lo <= hi:
            raise DslValidationError(f"bound [{lo}, {hi}] has lo > hi")

    used_raw = headers["used_features"]
    used = []
    for v in used_raw:
        if v != int(v):
            raise DslValidationError(f"feature index {v} is not an integer")
        v = int(v)
        if not 0 <= v < NUM_FEATURES:
            raise DslValidationError(f"feature index {v} out of range [0, {NUM_FEATURES - 1}]")
        used.append(v)
    if len(set(used)) > MAX_FEATURES:
        raise DslValidationError(f"feature budget exceeded: {len(set(used))} features, at most {MAX_FEATURES}")
    used_set = set(used)

    scope: set[str] = set()
    bindings = []
    for name, expr, tok in raw_bindings:
        _check_expr(expr, scope, len(params))
        if name in scope:
            raise DslSyntaxError(f"name {name!r} bound twice", tok.line, tok.col)
        scope.add(name)
        bindings.append((name, expr))
    _check_expr(result, scope, len(params))

    clamped = False
    fixed = []
    for v, (lo, hi) in zip(params, bounds):
        if v < lo or v > hi:
            clamped = True
            log.warning("initial parameter %r outside [%r, %r]; clamped", v, lo, hi)
            v = min(max(v, lo), hi)
        fixed.append(v)

    program = ScoreProgram(
        used_features=tuple(sorted(used_set)),
        params=tuple(fixed),
        bounds=tuple((float(lo), float(hi)) for lo, hi in bounds),
        bindings=tuple(bindings),
        result=result,
        clamped=clamped,
    )
    referenced = program.referenced_features()
    if len(referenced) > MAX_FEATURES:
        raise DslValidationError(f"feature budget exceeded: {len(referenced)} features, at most {MAX_FEATURES}")
    undeclared = referenced - used_set
    if undeclared:
        raise DslValidationError(f"use of undeclared feature(s) {sorted(undeclared)}")
    unused = used_set - referenced
    if unused:
        raise DslValidationError(f"declared feature(s) {sorted(unused)} are never used")
    return program


def _check_expr(expr: Expr, scope: set[str], n_params: int) -> None:
    for node in walk(expr):
        if isinstance(node, Name) and node.name not in scope:
            raise DslValidationError(f"unbound name {node.name!r}")
        if isinstance(node, Param) and node.index >= n_params:
            raise DslValidationError(f"param({node.index}) out of range for {n_params} params")
        if isinstance(node, Feature) and not 0 <= node.index < NUM_FEATURES:
            raise DslValidationError(f"feature index {node.index} out of range [0, {NUM_FEATURES - 1}]")


# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def fmt_number(v: float) -> str:
    # 17 significant digits always read back to the same double
    return format(float(v), ".17g")


def _fmt(expr: Expr) -> tuple[str, int]:
    """Text and precedence (3 = atomic)."""
    if isinstance(expr, Feature):
        return f"feature({expr.index})", 3
    if isinstance(expr, Param):
        return f"param({expr.index})", 3
    if isinstance(expr, Random):
        return "random()", 3
    if isinstance(expr, Name):
        return expr.name, 3
    if isinstance(expr, Literal):
        s = fmt_number(expr.value)
        # a leading minus binds like unary negation
        return s, (2.5 if s.startswith("-") else 3)
    if isinstance(expr, Unary):
        inner, p = _fmt(expr.operand)
        if expr.op == "neg":
            if p < 3 or isinstance(expr.operand, Literal):
                inner = f"({inner})"
            return f"-{inner}", 2.5
        return f"{expr.op}({inner})", 3
    if isinstance(expr, Clip):
        return f"clip({_fmt(expr.operand)[0]}, {_fmt(expr.lo)[0]}, {_fmt(expr.hi)[0]})", 3
    if isinstance(expr, Binary):
        if expr.op in BINARY_FUNCS:
            return f"{expr.op}({_fmt(expr.left)[0]}, {_fmt(expr.right)[0]})", 3
        prec = _PREC[expr.op]
        left, lp = _fmt(expr.left)
        right, rp = _fmt(expr.right)
        if lp < prec:
            left = f"({left})"
        if rp <= prec:
            right = f"({right})"
        return f"{left} {expr.op} {right}", prec
    raise TypeError(f"not an expression node: {expr!r}")


def format_expr(expr: Expr) -> str:
    return _fmt(expr)[0]


def serialize(program: ScoreProgram) -> str:
    lines = [
        VERSION,
        "used_features: [" + ", ".join(str(i) for i in program.used_features) + "]",
        "params: [" + ", ".join(fmt_number(v) for v in program.params) + "]",
        "bounds: [" + ", ".join(f"[{fmt_number(lo)}, {fmt_number(hi)}]" for lo, hi in program.bounds) + "]",
        "score:",
    ]
    for name, expr in program.bindings:
        lines.append(f"  let {name} = {format_expr(expr)}")
    lines.append(f"  return {format_expr(program.result)}")
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> ScoreProgram:
    return parse_program(text)
