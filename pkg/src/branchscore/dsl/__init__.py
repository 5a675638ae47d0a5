"""Score-program language: parsing, evaluation and branching policies."""

from .ast import Binary, Clip, Feature, Literal, Name, Param, Random, Unary
from .evaluate import EvaluationError, evaluate, select_branch_variable
from .parser import (
    DslError,
    DslSyntaxError,
    DslValidationError,
    ScoreProgram,
    deserialize,
    format_expr,
    parse_program,
    serialize,
)
from .policies import BUILTIN_NAMES, BuiltinPolicy, ProgramPolicy, builtin_score, make_policy

__all__ = [
    "Binary", "Clip", "Feature", "Literal", "Name", "Param", "Random", "Unary",
    "EvaluationError", "evaluate", "select_branch_variable",
    "DslError", "DslSyntaxError", "DslValidationError", "ScoreProgram",
    "deserialize", "format_expr", "parse_program", "serialize",
    "BUILTIN_NAMES", "BuiltinPolicy", "ProgramPolicy", "builtin_score", "make_policy",
]
