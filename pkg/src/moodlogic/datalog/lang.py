"""Syntax tree and fact storage for the Datalog subset.

Values are plain Python objects: ``str`` for symbols, ``int`` for numbers and
``float`` for floats. Relations keep their tuples in insertion order so that
evaluation (and therefore provenance) is deterministic run to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

Value = Union[str, int, float]

COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*", "/")
PARAM_TYPES = ("symbol", "number", "float")


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    end_line: int = 0
    end_col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Wildcard:
    pass


WILDCARD = Wildcard()


@dataclass(frozen=True)
class SymbolConst:
    text: str


@dataclass(frozen=True)
class NumberConst:
    value: int


@dataclass(frozen=True)
class FloatConst:
    value: float


@dataclass(frozen=True)
class ArithExpr:
    op: str  # one of ARITH_OPS
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class CountAggregate:
    target: "Atom"


Term = Union[Variable, Wildcard, SymbolConst, NumberConst, FloatConst, ArithExpr, CountAggregate]


def constant_value(term: Term) -> Value:
    if isinstance(term, SymbolConst):
        return term.text
    if isinstance(term, (NumberConst, FloatConst)):
        return term.value
    raise TypeError(f"not a constant term: {term!r}")


def term_variables(term: Term) -> Iterator[Variable]:
    """All variables in a term, including those inside aggregates."""
    if isinstance(term, Variable):
        yield term
    elif isinstance(term, ArithExpr):
        yield from term_variables(term.left)
        yield from term_variables(term.right)
    elif isinstance(term, CountAggregate):
        for arg in term.target.args:
            yield from term_variables(arg)


def term_aggregates(term: Term) -> Iterator[CountAggregate]:
    if isinstance(term, CountAggregate):
        yield term
    elif isinstance(term, ArithExpr):
        yield from term_aggregates(term.left)
        yield from term_aggregates(term.right)


# ---------------------------------------------------------------------------
# Atoms, literals, rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple[Term, ...]
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class Positive:
    atom: Atom


@dataclass(frozen=True)
class Negated:
    atom: Atom


@dataclass(frozen=True)
class Constraint:
    op: str  # one of COMPARISON_OPS
    lhs: Term
    rhs: Term
    span: Span = field(default=Span(0, 0), compare=False)


Literal = Union[Positive, Negated, Constraint]


@dataclass(frozen=True)
class Disjunction:
    """A parenthesized (or top-level) group of `;`-separated alternatives."""

    alternatives: tuple[tuple["BodyElem", ...], ...]


BodyElem = Union[Positive, Negated, Constraint, Disjunction]


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[BodyElem, ...]
    span: Span = field(default=Span(0, 0), compare=False)

    def is_expanded(self) -> bool:
        return all(not isinstance(e, Disjunction) for e in self.body)

    def literals(self) -> tuple[Literal, ...]:
        if not self.is_expanded():
            raise ValueError("rule still contains disjunction groups")
        return self.body  # type: ignore[return-value]


@dataclass(frozen=True)
class Declaration:
    relation: str
    params: tuple[tuple[str, str], ...]  # (name, type) with type in PARAM_TYPES
    span: Span = field(default=Span(0, 0), compare=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.params)


@dataclass
class Program:
    declarations: dict[str, Declaration] = field(default_factory=dict)
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    rules: list[Rule] = field(default_factory=list)
    ground_facts: list[Atom] = field(default_factory=list)

    def declared(self, relation: str) -> bool:
        return relation in self.declarations


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParseError:
    message: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class DatalogError(Exception):
    """Base class for engine-facing failures."""


class ParseFailed(DatalogError):
    def __init__(self, errors: list[ParseError], program: "Program | None" = None):
        super().__init__("; ".join(str(e) for e in errors[:3]) + ("" if len(errors) <= 3 else " ..."))
        self.errors = errors
        self.program = program


class EvaluationError(DatalogError):
    def __init__(self, message: str, span: Span | None = None):
        if span is not None and span.line:
            message = f"{span}: {message}"
        super().__init__(message)
        self.span = span


class UnknownRelationError(DatalogError):
    pass


# ---------------------------------------------------------------------------
# Fact storage
# ---------------------------------------------------------------------------

class FactStore:
    """Relation name -> ordered set of ground tuples.

    Tuples are kept in a dict used as an ordered set; iteration order is the
    insertion order, which keeps evaluation deterministic.
    """

    def __init__(self) -> None:
        self._relations: dict[str, dict[tuple[Value, ...], None]] = {}

    def ensure_relation(self, relation: str) -> None:
        self._relations.setdefault(relation, {})

    def add(self, relation: str, tup: tuple[Value, ...]) -> bool:
        """Insert a tuple; returns True when it was new."""
        rel = self._relations.setdefault(relation, {})
        if tup in rel:
            return False
        rel[tup] = None
        return True

    def contains(self, relation: str, tup: tuple[Value, ...]) -> bool:
        rel = self._relations.get(relation)
        return rel is not None and tup in rel

    def tuples(self, relation: str) -> list[tuple[Value, ...]]:
        return list(self._relations.get(relation, {}))

    def query(self, relation: str) -> set[tuple[Value, ...]]:
        if relation not in self._relations:
            raise UnknownRelationError(f"unknown relation: {relation}")
        return set(self._relations[relation])

    def relations(self) -> list[str]:
        return list(self._relations)

    def count(self, relation: str) -> int:
        return len(self._relations.get(relation, {}))

    def total(self) -> int:
        return sum(len(rel) for rel in self._relations.values())

    def copy(self) -> "FactStore":
        clone = FactStore()
        for name, rel in self._relations.items():
            clone._relations[name] = dict(rel)
        return clone

    def as_sets(self) -> dict[str, set[tuple[Value, ...]]]:
        return {name: set(rel) for name, rel in self._relations.items()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FactStore):
            return NotImplemented
        return self.as_sets() == other.as_sets()

    def __repr__(self) -> str:
        parts = ", ".join(f"{name}:{len(rel)}" for name, rel in self._relations.items())
        return f"FactStore({parts})"

    @classmethod
    def from_dict(cls, data: dict[str, Iterable[tuple[Value, ...]]]) -> "FactStore":
        store = cls()
        for name, tuples in data.items():
            store.ensure_relation(name)
            for tup in tuples:
                store.add(name, tuple(tup))
        return store


# ---------------------------------------------------------------------------
# Rendering (single canonical printer used by diffs, provenance and the CLI)
# ---------------------------------------------------------------------------

def format_value(value: Value) -> str:
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return str(value)


def render_term(term: Term) -> str:
    if isinstance(term, Variable):
        return term.name
    if isinstance(term, Wildcard):
        return "_"
    if isinstance(term, (SymbolConst, NumberConst, FloatConst)):
        return format_value(constant_value(term))
    if isinstance(term, ArithExpr):
        return f"({render_term(term.left)} {term.op} {render_term(term.right)})"
    if isinstance(term, CountAggregate):
        return f"count : {render_atom(term.target)}"
    raise TypeError(f"unknown term: {term!r}")


def render_atom(atom: Atom) -> str:
    args = ", ".join(render_term(a) for a in atom.args)
    return f"{atom.relation}({args})"


def render_fact(relation: str, tup: tuple[Value, ...]) -> str:
    args = ", ".join(format_value(v) for v in tup)
    return f"{relation}({args})"


def render_body_elem(elem: BodyElem) -> str:
    if isinstance(elem, Positive):
        return render_atom(elem.atom)
    if isinstance(elem, Negated):
        return f"!{render_atom(elem.atom)}"
    if isinstance(elem, Constraint):
        return f"{render_term(elem.lhs)} {elem.op} {render_term(elem.rhs)}"
    if isinstance(elem, Disjunction):
        alts = "; ".join(", ".join(render_body_elem(e) for e in alt) for alt in elem.alternatives)
        return f"({alts})"
    raise TypeError(f"unknown body element: {elem!r}")


def render_rule(rule: Rule) -> str:
    head = render_atom(rule.head)
    if not rule.body:
        return f"{head}."
    body = ", ".join(render_body_elem(e) for e in rule.body)
    return f"{head} :- {body}."
