"""A small Datalog engine: parser, checks, stratification and evaluation."""

from .analysis import SemanticError, analyze, check_safety, expand_disjunctions
from .engine import evaluate, query
from .lang import (
    Atom,
    Constraint,
    DatalogError,
    EvaluationError,
    FactStore,
    Negated,
    ParseError,
    ParseFailed,
    Positive,
    Program,
    Rule,
    Span,
    UnknownRelationError,
    render_atom,
    render_fact,
    render_rule,
)
from .parser import parse, parse_ground_atom, parse_with_errors
from .stratify import CycleError, StratifiedPlan, stratify

__all__ = [
    "Atom",
    "Constraint",
    "CycleError",
    "DatalogError",
    "EvaluationError",
    "FactStore",
    "Negated",
    "ParseError",
    "ParseFailed",
    "Positive",
    "Program",
    "Rule",
    "SemanticError",
    "Span",
    "StratifiedPlan",
    "UnknownRelationError",
    "analyze",
    "check_safety",
    "evaluate",
    "expand_disjunctions",
    "parse",
    "parse_ground_atom",
    "parse_with_errors",
    "query",
    "render_atom",
    "render_fact",
    "render_rule",
    "stratify",
]
