"""Disjunction expansion and semantic checks (declarations, types, safety)."""

from __future__ import annotations

from dataclasses import dataclass

from .lang import (
    ArithExpr,
    Atom,
    BodyElem,
    Constraint,
    CountAggregate,
    Disjunction,
    FloatConst,
    Negated,
    NumberConst,
    Positive,
    Program,
    Rule,
    Span,
    SymbolConst,
    Term,
    Variable,
    Wildcard,
    term_aggregates,
)

# Error kinds, in lint-code order.
UNDECLARED = "undeclared_relation"
ARITY = "arity_mismatch"
TYPE = "type_mismatch"
UNSAFE = "unsafe_variable"


@dataclass(frozen=True)
class SemanticError:
    kind: str
    message: str
    span: Span

    def __str__(self) -> str:
        return f"{self.span}: {self.message}"


# ---------------------------------------------------------------------------
# Disjunction expansion
# ---------------------------------------------------------------------------

def _expand_elems(elems: tuple[BodyElem, ...]) -> list[tuple[BodyElem, ...]]:
    expansions: list[tuple[BodyElem, ...]] = [()]
    for elem in elems:
        if isinstance(elem, Disjunction):
            choices: list[tuple[BodyElem, ...]] = []
            for alternative in elem.alternatives:
                choices.extend(_expand_elems(alternative))
            expansions = [prefix + choice for prefix in expansions for choice in choices]
        else:
            expansions = [prefix + (elem,) for prefix in expansions]
    return expansions


def expand_disjunctions(program: Program) -> Program:
    """Rewrite every rule body into pure conjunctions.

    A body with disjunction groups becomes one rule per combination of
    choices (the cross product, rightmost group varying fastest). Rules
    without groups pass through unchanged; expanded rules keep the source
    span of the original rule.
    """
    rules: list[Rule] = []
    for rule in program.rules:
        if rule.is_expanded():
            rules.append(rule)
            continue
        for body in _expand_elems(rule.body):
            rules.append(Rule(head=rule.head, body=body, span=rule.span))
    return Program(
        declarations=dict(program.declarations),
        inputs=list(program.inputs),
        outputs=list(program.outputs),
        rules=rules,
        ground_facts=list(program.ground_facts),
    )


# ---------------------------------------------------------------------------
# Safety / declaration / type checking
# ---------------------------------------------------------------------------

def _const_type(term: Term) -> str | None:
    if isinstance(term, SymbolConst):
        return "symbol"
    if isinstance(term, NumberConst):
        return "number"
    if isinstance(term, FloatConst):
        return "float"
    return None


class _RuleChecker:
    """Per-rule state: variable typing plus bound-variable tracking."""

    def __init__(self, program: Program, rule: Rule, errors: list[SemanticError]):
        self.program = program
        self.rule = rule
        self.errors = errors
        self.var_types: dict[str, str] = {}

    def err(self, kind: str, message: str, span: Span | None = None) -> None:
        self.errors.append(SemanticError(kind, message, span or self.rule.span))

    def check_atom_shape(self, atom: Atom) -> bool:
        decl = self.program.declarations.get(atom.relation)
        if decl is None:
            self.err(UNDECLARED, f"relation {atom.relation} is not declared", atom.span)
            return False
        if len(atom.args) != decl.arity:
            self.err(
                ARITY,
                f"{atom.relation} takes {decl.arity} argument(s), got {len(atom.args)}",
                atom.span,
            )
            return False
        return True

    def note_var(self, name: str, expected: str, span: Span) -> None:
        seen = self.var_types.get(name)
        if seen is None:
            self.var_types[name] = expected
        elif seen != expected:
            self.err(TYPE, f"variable {name} used as both {seen} and {expected}", span)

    def type_atom_args(self, atom: Atom) -> None:
        decl = self.program.declarations.get(atom.relation)
        if decl is None or len(atom.args) != decl.arity:
            return
        for arg, expected in zip(atom.args, decl.types):
            if isinstance(arg, Variable):
                self.note_var(arg.name, expected, atom.span)
            else:
                got = _const_type(arg)
                if got is not None and got != expected:
                    self.err(
                        TYPE,
                        f"{atom.relation} expects {expected}, got {got} constant",
                        atom.span,
                    )

    def term_type(self, term: Term, span: Span) -> str | None:
        """Best-effort type of a term; records arithmetic misuse."""
        if isinstance(term, Variable):
            return self.var_types.get(term.name)
        if isinstance(term, Wildcard):
            return None
        const = _const_type(term)
        if const is not None:
            return const
        if isinstance(term, CountAggregate):
            return "number"
        if isinstance(term, ArithExpr):
            lt = self.term_type(term.left, span)
            rt = self.term_type(term.right, span)
            for side in (lt, rt):
                if side == "symbol":
                    self.err(TYPE, "arithmetic over symbol values", span)
                    return None
            if lt is None or rt is None:
                return None
            return "float" if "float" in (lt, rt) else "number"
        return None


def _positive_bound(rule: Rule) -> set[str]:
    bound: set[str] = set()
    for lit in rule.literals():
        if isinstance(lit, Positive):
            for arg in lit.atom.args:
                if isinstance(arg, Variable):
                    bound.add(arg.name)
    # `V = count : Target(...)` binds V (the only constraint form that binds).
    for lit in rule.literals():
        if isinstance(lit, Constraint) and lit.op == "=":
            for var_side, agg_side in ((lit.lhs, lit.rhs), (lit.rhs, lit.lhs)):
                if isinstance(var_side, Variable) and isinstance(agg_side, CountAggregate):
                    bound.add(var_side.name)
    return bound


def _vars_outside_aggregates(term: Term) -> set[str]:
    if isinstance(term, Variable):
        return {term.name}
    if isinstance(term, ArithExpr):
        return _vars_outside_aggregates(term.left) | _vars_outside_aggregates(term.right)
    return set()


def check_safety(program: Program) -> list[SemanticError]:
    """Declaration, arity, type and safety checks over an expanded program.

    Returns an empty list when the program is clean. Requires
    expand_disjunctions to have run (raises ValueError otherwise).
    """
    errors: list[SemanticError] = []

    for name in program.inputs:
        if name not in program.declarations:
            errors.append(SemanticError(UNDECLARED, f".input {name} is not declared", Span(0, 0)))
    for name in program.outputs:
        if name not in program.declarations:
            errors.append(SemanticError(UNDECLARED, f".output {name} is not declared", Span(0, 0)))

    for fact in program.ground_facts:
        checker = _RuleChecker(program, Rule(fact, ()), errors)
        if checker.check_atom_shape(fact):
            checker.type_atom_args(fact)

    for rule in program.rules:
        if not rule.is_expanded():
            raise ValueError("check_safety requires a disjunction-expanded program")
        _check_rule(program, rule, errors)
    return errors


def _check_rule(program: Program, rule: Rule, errors: list[SemanticError]) -> None:
    checker = _RuleChecker(program, rule, errors)

    atoms: list[tuple[Atom, bool]] = [(rule.head, True)]
    for lit in rule.literals():
        if isinstance(lit, Positive):
            atoms.append((lit.atom, False))
        elif isinstance(lit, Negated):
            atoms.append((lit.atom, False))
            for arg in lit.atom.args:
                if isinstance(arg, (ArithExpr, CountAggregate)):
                    checker.err(TYPE, "negated atoms cannot contain expressions", lit.atom.span)

    # Aggregate targets are atoms too (declaration + typing of group vars).
    agg_targets: list[Atom] = []
    for term in list(rule.head.args) + [
        side for lit in rule.literals() if isinstance(lit, Constraint) for side in (lit.lhs, lit.rhs)
    ]:
        for agg in term_aggregates(term):
            agg_targets.append(agg.target)

    shapes_ok = True
    for atom, _ in atoms:
        if not checker.check_atom_shape(atom):
            shapes_ok = False
    for atom in agg_targets:
        if not checker.check_atom_shape(atom):
            shapes_ok = False

    for atom, is_head in atoms:
        if is_head:
            # Head args may be expressions; plain variables are typed below.
            decl = program.declarations.get(atom.relation)
            if decl is not None and len(atom.args) == decl.arity:
                for arg, expected in zip(atom.args, decl.types):
                    if isinstance(arg, Variable):
                        checker.note_var(arg.name, expected, atom.span)
                    elif isinstance(arg, Wildcard):
                        checker.err(UNSAFE, "wildcard in rule head", atom.span)
                    elif _const_type(arg) is not None:
                        got = _const_type(arg)
                        if got != expected:
                            checker.err(TYPE, f"{atom.relation} expects {expected}, got {got} constant", atom.span)
        else:
            checker.type_atom_args(atom)
    for atom in agg_targets:
        checker.type_atom_args(atom)

    # Typed expression checks (head expressions and constraints).
    if shapes_ok:
        decl = program.declarations.get(rule.head.relation)
        if decl is not None:
            for arg, expected in zip(rule.head.args, decl.types):
                if isinstance(arg, (ArithExpr, CountAggregate)):
                    got = checker.term_type(arg, rule.head.span)
                    if got is not None and got != expected:
                        checker.err(
                            TYPE,
                            f"{rule.head.relation} expects {expected}, expression has type {got}",
                            rule.head.span,
                        )
        for lit in rule.literals():
            if not isinstance(lit, Constraint):
                continue
            lt = checker.term_type(lit.lhs, lit.span)
            rt = checker.term_type(lit.rhs, lit.span)
            if lt == "symbol" or rt == "symbol":
                if lt != rt:
                    checker.err(TYPE, f"cannot compare {lt or '?'} with {rt or '?'}", lit.span)
                elif lit.op not in ("=", "!="):
                    checker.err(TYPE, f"ordered comparison {lit.op} on symbols", lit.span)

    # Safety: everything outside positive atoms must be bound.
    bound = _positive_bound(rule)

    def require_bound(names: set[str], where: str, span: Span) -> None:
        for name in sorted(names - bound):
            checker.err(UNSAFE, f"variable {name} in {where} is not bound by a positive literal", span)

    for arg in rule.head.args:
        require_bound(_vars_outside_aggregates(arg), "rule head", rule.head.span)
        for agg in term_aggregates(arg):
            _check_aggregate(rule, agg, bound, checker)
    for lit in rule.literals():
        if isinstance(lit, Negated):
            names = {a.name for a in lit.atom.args if isinstance(a, Variable)}
            require_bound(names, "negated literal", lit.atom.span)
        elif isinstance(lit, Constraint):
            for side in (lit.lhs, lit.rhs):
                require_bound(_vars_outside_aggregates(side), "constraint", lit.span)
                for agg in term_aggregates(side):
                    _check_aggregate(rule, agg, bound, checker)


def _check_aggregate(rule: Rule, agg: CountAggregate, bound: set[str], checker: _RuleChecker) -> None:
    """Group variables (shared with the rest of the rule) must be bound."""
    elsewhere = _vars_used_outside_aggregate(rule, agg)
    for arg in agg.target.args:
        if isinstance(arg, Variable) and arg.name in elsewhere and arg.name not in bound:
            checker.err(
                UNSAFE,
                f"aggregate group variable {arg.name} is not bound by a positive literal",
                agg.target.span,
            )


def _vars_used_outside_aggregate(rule: Rule, agg: CountAggregate) -> set[str]:
    names: set[str] = set()

    def collect(term: Term) -> None:
        if isinstance(term, Variable):
            names.add(term.name)
        elif isinstance(term, ArithExpr):
            collect(term.left)
            collect(term.right)
        elif isinstance(term, CountAggregate) and term is not agg:
            for a in term.target.args:
                collect(a)

    for arg in rule.head.args:
        collect(arg)
    for lit in rule.literals():
        if isinstance(lit, Positive) or isinstance(lit, Negated):
            for a in lit.atom.args:
                if isinstance(a, Variable):
                    names.add(a.name)
        elif isinstance(lit, Constraint):
            collect(lit.lhs)
            collect(lit.rhs)
    return names


def analyze(program: Program) -> Program:
    """Expand and check; raises ValueError with messages when unclean."""
    expanded = expand_disjunctions(program)
    errors = check_safety(expanded)
    if errors:
        raise ValueError("; ".join(str(e) for e in errors))
    return expanded


__all__ = [
    "SemanticError",
    "expand_disjunctions",
    "check_safety",
    "analyze",
    "UNDECLARED",
    "ARITY",
    "TYPE",
    "UNSAFE",
]
