from __future__ import annotations

import numpy as np

from .ast import Binary, Clip, Expr, Feature, Literal, Name, Param, Random, Unary
from .parser import ScoreProgram


class EvaluationError(ArithmeticError):
    """A score program produced a non-finite value."""

    def __init__(self, node: Expr, message: str):
        super().__init__(message)
        self.node = node


def _softplus(z):
    # log1p(exp(z)) without overflow for large z
    z = np.asarray(z, dtype=float)
    big = z > 30.0
    out = np.empty_like(z)
    out[big] = z[big] + np.log1p(np.exp(-z[big]))
    out[~big] = np.log1p(np.exp(z[~big]))
    return out


_UNARY = {
    "neg": np.negative,
    "abs": np.abs,
    "tanh": np.tanh,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "log1p": np.log1p,
}
_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "min": np.minimum,
    "max": np.maximum,
    "pow": np.power,
}


class _Evaluator:
    def __init__(self, features: np.ndarray, theta, rng_key):
        self.X = features
        self.theta = theta
        self.k = features.shape[0]
        self.env: dict[str, np.ndarray | float] = {}
        self.rng_key = rng_key

    def check(self, node, value):
        if not np.all(np.isfinite(value)):
            raise EvaluationError(node, f"non-finite value in {type(node).__name__}")
        return value

    def eval(self, node):
        if isinstance(node, Feature):
            return self.X[:, node.index]
        if isinstance(node, Param):
            return float(self.theta[node.index])
        if isinstance(node, Literal):
            return node.value
        if isinstance(node, Name):
            return self.env[node.name]
        if isinstance(node, Random):
            key = self.rng_key if self.rng_key is not None else (0, 0)
            gen = np.random.Generator(np.random.Philox(key=key[0], counter=[key[1], 0, 0, 0]))
            return gen.random(self.k)
        with np.errstate(all="ignore"):
            if isinstance(node, Unary):
                if node.op == "log1p" and isinstance(node.operand, Unary) and node.operand.op == "exp":
                    z = self.eval(node.operand.operand)
                    return self.check(node, _softplus(z) if np.ndim(z) else float(_softplus([z])[0]))
                v = self.eval(node.operand)
                return self.check(node, _UNARY[node.op](v))
            if isinstance(node, Binary):
                a = self.eval(node.left)
                b = self.eval(node.right)
                return self.check(node, _BINARY[node.op](a, b))
            if isinstance(node, Clip):
                v = self.eval(node.operand)
                lo = self.eval(node.lo)
                hi = self.eval(node.hi)
                return self.check(node, np.minimum(np.maximum(v, lo), hi))
        raise TypeError(f"unknown node {node!r}")


def evaluate(program: ScoreProgram, theta, features, rng_key: tuple[int, int] | None = None) -> np.ndarray:
    """Score every candidate row of ``features`` (a FeatureMatrix or an array).

    ``rng_key`` = (seed, counter) feeds ``random()``; the result is a pure
    function of its arguments.
    """
    X = getattr(features, "values", features)
    X = np.asarray(X, dtype=float)
    theta = np.asarray(program.params if theta is None else theta, dtype=float)
    if theta.shape[0] != len(program.bounds):
        raise ValueError(f"expected {len(program.bounds)} params, got {theta.shape[0]}")
    ev = _Evaluator(X, theta, rng_key)
    for name, expr in program.bindings:
        ev.env[name] = ev.eval(expr)
    out = ev.eval(program.result)
    out = np.broadcast_to(np.asarray(out, dtype=float), (X.shape[0],)).copy()
    if not np.all(np.isfinite(out)):
        raise EvaluationError(program.result, "non-finite score")
    return out


def select_branch_variable(scores, candidates) -> int:
    """Candidate with the highest score; ties go to the lowest candidate index."""
    scores = np.asarray(scores, dtype=float)
    candidates = np.asarray(candidates)
    if scores.shape[0] == 0 or scores.shape[0] != candidates.shape[0]:
        raise ValueError("scores and candidates must be nonempty and of equal length")
    best = scores.max()
    return int(candidates[scores == best].min())
