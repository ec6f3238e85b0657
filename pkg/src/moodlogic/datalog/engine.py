"""Bottom-up evaluation: stratum order outside, semi-naive iteration inside.

Rules are compiled once per evaluation into positional match specs consumed
by the join kernel. Constraints run after the positive join (safety
guarantees their variables are bound), negation and aggregation read only
lower strata (guaranteed by the stratifier).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import kernels
from .lang import (
    ArithExpr,
    Constraint,
    CountAggregate,
    EvaluationError,
    FactStore,
    FloatConst,
    Negated,
    NumberConst,
    Positive,
    Program,
    Rule,
    Span,
    SymbolConst,
    Term,
    Value,
    Variable,
    Wildcard,
    constant_value,
)
from .stratify import StratifiedPlan

# Spec kinds shared with the kernels.
K_CONST = 0
K_BIND = 1
K_CHECK = 2
K_WILD = 3


@dataclass
class CompiledRule:
    rule: Rule
    index: int  # position in the expanded program
    nslots: int
    slot_names: list[str]
    slot_of: dict[str, int]
    positives: list[tuple[str, tuple[tuple[int, object], ...]]]
    agg_binds: list[tuple[int, CountAggregate]]
    constraints: list[Constraint]
    negations: list[tuple[str, tuple[tuple[int, object], ...]]]
    head_args: tuple[Term, ...]

    @property
    def head_relation(self) -> str:
        return self.rule.head.relation


class Recorder:
    """Provenance hook; the default implementation records nothing."""

    def input_fact(self, relation: str, tup: tuple[Value, ...]) -> None:
        pass

    def text_fact(self, relation: str, tup: tuple[Value, ...], span: Span) -> None:
        pass

    def derived(
        self,
        relation: str,
        tup: tuple[Value, ...],
        crule: CompiledRule,
        binding: list[Value],
        children: tuple[tuple[str, tuple[Value, ...]], ...],
        store: FactStore,
    ) -> None:
        pass


def compile_rule(rule: Rule, index: int) -> CompiledRule:
    slot_of: dict[str, int] = {}
    slot_names: list[str] = []

    def slot(name: str) -> int:
        if name not in slot_of:
            slot_of[name] = len(slot_names)
            slot_names.append(name)
        return slot_of[name]

    positives: list[tuple[str, tuple[tuple[int, object], ...]]] = []
    for lit in rule.literals():
        if not isinstance(lit, Positive):
            continue
        spec: list[tuple[int, object]] = []
        for arg in lit.atom.args:
            if isinstance(arg, Variable):
                if arg.name in slot_of:
                    spec.append((K_CHECK, slot_of[arg.name]))
                else:
                    spec.append((K_BIND, slot(arg.name)))
            elif isinstance(arg, Wildcard):
                spec.append((K_WILD, 0))
            else:
                spec.append((K_CONST, constant_value(arg)))
        positives.append((lit.atom.relation, tuple(spec)))

    agg_binds: list[tuple[int, CountAggregate]] = []
    constraints: list[Constraint] = []
    for lit in rule.literals():
        if not isinstance(lit, Constraint):
            continue
        bind_var: Variable | None = None
        agg: CountAggregate | None = None
        if lit.op == "=":
            for var_side, other in ((lit.lhs, lit.rhs), (lit.rhs, lit.lhs)):
                if (
                    isinstance(var_side, Variable)
                    and isinstance(other, CountAggregate)
                    and var_side.name not in slot_of
                ):
                    bind_var, agg = var_side, other
                    break
        if bind_var is not None and agg is not None:
            agg_binds.append((slot(bind_var.name), agg))
        else:
            constraints.append(lit)

    negations: list[tuple[str, tuple[tuple[int, object], ...]]] = []
    for lit in rule.literals():
        if not isinstance(lit, Negated):
            continue
        spec = []
        for arg in lit.atom.args:
            if isinstance(arg, Variable):
                if arg.name not in slot_of:
                    raise EvaluationError(
                        f"variable {arg.name} in negated literal is unbound", rule.span
                    )
                spec.append((K_CHECK, slot_of[arg.name]))
            elif isinstance(arg, Wildcard):
                spec.append((K_WILD, 0))
            else:
                spec.append((K_CONST, constant_value(arg)))
        negations.append((lit.atom.relation, tuple(spec)))

    return CompiledRule(
        rule=rule,
        index=index,
        nslots=len(slot_names),
        slot_names=slot_names,
        slot_of=slot_of,
        positives=positives,
        agg_binds=agg_binds,
        constraints=constraints,
        negations=negations,
        head_args=rule.head.args,
    )


# ---------------------------------------------------------------------------
# Runtime term evaluation
# ---------------------------------------------------------------------------

def _int_div(a: int, b: int) -> int:
    q = a // b
    if q < 0 and q * b != a:
        q += 1  # truncate toward zero
    return q


def _aggregate_pattern(
    agg: CountAggregate, slot_of: dict[str, int], binding: list[Value]
) -> tuple[tuple[int, object], ...]:
    spec: list[tuple[int, object]] = []
    for arg in agg.target.args:
        if isinstance(arg, Variable):
            idx = slot_of.get(arg.name)
            if idx is None or binding[idx] is None:
                # Not shared with the rest of the rule: counted over.
                spec.append((K_WILD, 0))
            else:
                spec.append((K_CHECK, idx))
        elif isinstance(arg, Wildcard):
            spec.append((K_WILD, 0))
        else:
            spec.append((K_CONST, constant_value(arg)))
    return tuple(spec)


def eval_term(
    term: Term,
    binding: list[Value],
    slot_of: dict[str, int],
    store: FactStore,
    span: Span,
) -> Value:
    if isinstance(term, Variable):
        idx = slot_of.get(term.name)
        if idx is None or binding[idx] is None:
            raise EvaluationError(f"unbound variable {term.name}", span)
        return binding[idx]
    if isinstance(term, (SymbolConst, NumberConst, FloatConst)):
        return constant_value(term)
    if isinstance(term, CountAggregate):
        spec = _aggregate_pattern(term, slot_of, binding)
        return kernels.count_matches(store.tuples(term.target.relation), spec, binding)
    if isinstance(term, ArithExpr):
        left = eval_term(term.left, binding, slot_of, store, span)
        right = eval_term(term.right, binding, slot_of, store, span)
        if isinstance(left, str) or isinstance(right, str):
            raise EvaluationError("arithmetic over symbol values", span)
        if term.op == "+":
            return left + right
        if term.op == "-":
            return left - right
        if term.op == "*":
            return left * right
        if term.op == "/":
            if right == 0:
                raise EvaluationError("division by zero", span)
            if isinstance(left, int) and isinstance(right, int):
                return _int_div(left, right)
            return left / right
        raise EvaluationError(f"unknown operator {term.op}", span)
    raise EvaluationError(f"cannot evaluate term {term!r}", span)


def eval_constraint(
    con: Constraint,
    binding: list[Value],
    slot_of: dict[str, int],
    store: FactStore,
) -> bool:
    left = eval_term(con.lhs, binding, slot_of, store, con.span)
    right = eval_term(con.rhs, binding, slot_of, store, con.span)
    ls, rs = isinstance(left, str), isinstance(right, str)
    if ls != rs:
        raise EvaluationError("comparison between symbol and numeric value", con.span)
    if ls and con.op not in ("=", "!="):
        raise EvaluationError(f"ordered comparison {con.op} on symbols", con.span)
    if con.op == "=":
        return left == right
    if con.op == "!=":
        return left != right
    if con.op == "<":
        return left < right
    if con.op == "<=":
        return left <= right
    if con.op == ">":
        return left > right
    if con.op == ">=":
        return left >= right
    raise EvaluationError(f"unknown comparison {con.op}", con.span)


# ---------------------------------------------------------------------------
# Input validation
# ---------------------------------------------------------------------------

_TYPE_CHECKS: dict[str, Callable[[Value], bool]] = {
    "symbol": lambda v: isinstance(v, str),
    "number": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "float": lambda v: isinstance(v, float),
}


def _seed_store(program: Program, input_store: FactStore, recorder: Recorder) -> FactStore:
    store = FactStore()
    for rel in program.declarations:
        store.ensure_relation(rel)
    for rel in input_store.relations():
        decl = program.declarations.get(rel)
        if decl is None:
            raise EvaluationError(f"facts provided for undeclared relation {rel}")
        for tup in input_store.tuples(rel):
            if len(tup) != decl.arity:
                raise EvaluationError(
                    f"{rel} fact {tup!r} has {len(tup)} column(s), declared {decl.arity}"
                )
            for value, expected in zip(tup, decl.types):
                if not _TYPE_CHECKS[expected](value):
                    raise EvaluationError(
                        f"{rel} fact {tup!r}: {value!r} is not a {expected}"
                    )
            if store.add(rel, tup):
                recorder.input_fact(rel, tup)
    for fact in program.ground_facts:
        tup = tuple(constant_value(a) for a in fact.args)
        if store.add(fact.relation, tup):
            recorder.text_fact(fact.relation, tup, fact.span)
    return store


# ---------------------------------------------------------------------------
# Fixpoint
# ---------------------------------------------------------------------------

def _fire(
    crule: CompiledRule,
    store: FactStore,
    recorder: Recorder,
    capture: bool,
    relation_tuples: list[list[tuple[Value, ...]]],
) -> list[tuple[str, tuple[Value, ...]]]:
    """Run one rule against the given per-atom tuple lists; add new facts."""
    slot_of = crule.slot_of
    specs = [spec for _, spec in crule.positives]
    results = kernels.enumerate_bindings(relation_tuples, specs, crule.nslots, capture)

    added: list[tuple[str, tuple[Value, ...]]] = []
    span = crule.rule.span
    for item in results:
        if capture:
            binding, chosen = item
        else:
            binding, chosen = item, ()
        ok = True
        for slot_idx, agg in crule.agg_binds:
            binding[slot_idx] = kernels.count_matches(
                store.tuples(agg.target.relation),
                _aggregate_pattern(agg, slot_of, binding),
                binding,
            )
        for con in crule.constraints:
            if not eval_constraint(con, binding, slot_of, store):
                ok = False
                break
        if not ok:
            continue
        for rel, spec in crule.negations:
            if kernels.match_pattern(store.tuples(rel), spec, binding):
                ok = False
                break
        if not ok:
            continue
        head_tuple = tuple(
            eval_term(arg, binding, slot_of, store, span) for arg in crule.head_args
        )
        if store.add(crule.head_relation, head_tuple):
            added.append((crule.head_relation, head_tuple))
            if capture:
                children = tuple(
                    (crule.positives[i][0], chosen[i]) for i in range(len(chosen))
                )
                recorder.derived(
                    crule.head_relation, head_tuple, crule, binding, children, store
                )
    return added


def evaluate(
    plan: StratifiedPlan,
    input_store: FactStore,
    recorder: Optional[Recorder] = None,
) -> FactStore:
    """Least fixpoint of the plan over the input facts.

    The result contains the input facts plus every derived fact, with an
    entry (possibly empty) for every declared relation.
    """
    capture = recorder is not None
    rec = recorder if recorder is not None else Recorder()
    program = plan.program
    store = _seed_store(program, input_store, rec)

    rule_index = {id(rule): i for i, rule in enumerate(program.rules)}
    for stratum in plan.strata:
        compiled = [compile_rule(rule, rule_index[id(rule)]) for rule in stratum]
        derived_here = {c.head_relation for c in compiled}

        # Round 0: every rule once, against the full store.
        delta: dict[str, list[tuple[Value, ...]]] = {}
        for crule in compiled:
            tuple_lists = [store.tuples(rel) for rel, _ in crule.positives]
            for rel, tup in _fire(crule, store, rec, capture, tuple_lists):
                delta.setdefault(rel, []).append(tup)

        # Delta rounds: only rules that positively join a relation of this
        # stratum, with one such position restricted to the last delta.
        recursive = [
            (crule, [i for i, (rel, _) in enumerate(crule.positives) if rel in derived_here])
            for crule in compiled
        ]
        recursive = [(c, pos) for c, pos in recursive if pos]
        while delta:
            next_delta: dict[str, list[tuple[Value, ...]]] = {}
            for crule, positions in recursive:
                for p in positions:
                    rel_p = crule.positives[p][0]
                    delta_tuples = delta.get(rel_p)
                    if not delta_tuples:
                        continue
                    tuple_lists = [
                        delta_tuples if i == p else store.tuples(rel)
                        for i, (rel, _) in enumerate(crule.positives)
                    ]
                    for rel, tup in _fire(crule, store, rec, capture, tuple_lists):
                        next_delta.setdefault(rel, []).append(tup)
            delta = next_delta
    return store


def query(store: FactStore, relation: str) -> set[tuple[Value, ...]]:
    """The relation's tuple set; raises UnknownRelationError when undeclared."""
    return store.query(relation)
