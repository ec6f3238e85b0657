"""Derivation trees: record why each fact holds, then explain and render it.

Every derived fact gets one justification (the first derivation found, in
deterministic evaluation order). Negated literals are recorded as
checked-absent annotations, aggregates as the counted tuples (up to a bound)
plus the resulting value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

from .datalog.engine import (
    CompiledRule,
    Recorder,
    _aggregate_pattern,
    eval_term,
    evaluate,
)
from .datalog.lang import (
    Atom,
    CountAggregate,
    DatalogError,
    FactStore,
    Negated,
    Span,
    Value,
    Variable,
    Wildcard,
    constant_value,
    format_value,
    render_fact,
    render_rule,
    render_term,
    term_aggregates,
)
from .datalog.stratify import StratifiedPlan

MAX_COUNTED_TUPLES = 50

Fact = tuple[str, tuple[Value, ...]]


@dataclass(frozen=True)
class InputFact:
    pass


@dataclass(frozen=True)
class TextFact:
    line: int


@dataclass(frozen=True)
class RuleInstance:
    rule_index: int
    rule_text: str
    line: int
    bindings: tuple[tuple[str, Value], ...]
    children: tuple[Fact, ...]
    checks: tuple[dict, ...]


Justification = Union[InputFact, TextFact, RuleInstance]


class NotDerived(DatalogError):
    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason  # "unknown_relation" | "absent"


@dataclass
class ProvenanceIndex:
    plan: StratifiedPlan
    entries: dict[Fact, Justification] = field(default_factory=dict)

    def covered(self, relation: str, tup: tuple[Value, ...]) -> bool:
        return (relation, tup) in self.entries

    def justification(self, relation: str, tup: tuple[Value, ...]) -> Justification:
        just = self.entries.get((relation, tup))
        if just is None:
            if relation not in self.plan.program.declarations:
                raise NotDerived(f"unknown relation: {relation}", "unknown_relation")
            raise NotDerived(f"{render_fact(relation, tup)} was not derived", "absent")
        return just

    def derived_facts(self) -> Iterator[Fact]:
        """Facts justified by a rule instance (inputs and text facts excluded)."""
        for fact, just in self.entries.items():
            if isinstance(just, RuleInstance):
                yield fact


class _ProvenanceRecorder(Recorder):
    def __init__(self, plan: StratifiedPlan):
        self.plan = plan
        self.index = ProvenanceIndex(plan)

    def input_fact(self, relation: str, tup: tuple[Value, ...]) -> None:
        self.index.entries.setdefault((relation, tup), InputFact())

    def text_fact(self, relation: str, tup: tuple[Value, ...], span: Span) -> None:
        self.index.entries.setdefault((relation, tup), TextFact(line=span.line))

    def derived(
        self,
        relation: str,
        tup: tuple[Value, ...],
        crule: CompiledRule,
        binding: list[Value],
        children: tuple[Fact, ...],
        store: FactStore,
    ) -> None:
        key = (relation, tup)
        if key in self.index.entries:
            return
        bindings = tuple(
            (name, binding[i])
            for i, name in enumerate(crule.slot_names)
            if binding[i] is not None
        )
        checks = self._collect_checks(crule, binding, store)
        self.index.entries[key] = RuleInstance(
            rule_index=crule.index,
            rule_text=render_rule(crule.rule),
            line=crule.rule.span.line,
            bindings=bindings,
            children=children,
            checks=tuple(checks),
        )

    def _collect_checks(
        self, crule: CompiledRule, binding: list[Value], store: FactStore
    ) -> list[dict]:
        checks: list[dict] = []
        slot_of = crule.slot_of
        span = crule.rule.span

        def count_record(agg: CountAggregate) -> dict:
            pattern = _aggregate_pattern(agg, slot_of, binding)
            tuples = [
                tup
                for tup in store.tuples(agg.target.relation)
                if _matches(tup, pattern, binding)
            ]
            record = {
                "kind": "count",
                "target": _ground_pattern_text(agg.target, slot_of, binding),
                "value": len(tuples),
            }
            record["tuples"] = [list(t) for t in tuples] if len(tuples) <= MAX_COUNTED_TUPLES else None
            return record

        for _, agg in crule.agg_binds:
            checks.append(count_record(agg))
        for term in crule.head_args:
            for agg in _aggregates_in(term):
                checks.append(count_record(agg))
        for con in crule.constraints:
            lhs = eval_term(con.lhs, binding, slot_of, store, span)
            rhs = eval_term(con.rhs, binding, slot_of, store, span)
            checks.append(
                {
                    "kind": "constraint",
                    "text": f"{render_term(con.lhs)} {con.op} {render_term(con.rhs)}",
                    "lhs": lhs,
                    "rhs": rhs,
                    "holds": True,
                }
            )
            for side in (con.lhs, con.rhs):
                for agg in _aggregates_in(side):
                    checks.append(count_record(agg))
        negated_atoms = [lit.atom for lit in crule.rule.literals() if isinstance(lit, Negated)]
        for atom in negated_atoms:
            checks.append(
                {
                    "kind": "absent",
                    "relation": atom.relation,
                    "pattern": _ground_pattern_text(atom, slot_of, binding),
                    "stratum": self.plan.level_of.get(atom.relation, 0),
                }
            )
        return checks


def _aggregates_in(term) -> list[CountAggregate]:
    return list(term_aggregates(term))


def _matches(tup, spec, binding) -> bool:
    for j, (kind, payload) in enumerate(spec):
        value = tup[j]
        if kind == 0 and value != payload:
            return False
        if kind == 2 and binding[payload] != value:
            return False
    return True


def _ground_pattern_text(atom: Atom, slot_of: dict[str, int], binding: list[Value]) -> str:
    parts = []
    for arg in atom.args:
        if isinstance(arg, Variable) and arg.name in slot_of and binding[slot_of[arg.name]] is not None:
            parts.append(format_value(binding[slot_of[arg.name]]))
        elif isinstance(arg, (Variable, Wildcard)):
            parts.append("_")
        else:
            parts.append(format_value(constant_value(arg)))
    return f"{atom.relation}({', '.join(parts)})"


def evaluate_with_provenance(
    plan: StratifiedPlan, input_store: FactStore
) -> tuple[FactStore, ProvenanceIndex]:
    """Same fixpoint as evaluate(), plus a justification for every fact."""
    recorder = _ProvenanceRecorder(plan)
    store = evaluate(plan, input_store, recorder)
    return store, recorder.index


# ---------------------------------------------------------------------------
# Trees
# ---------------------------------------------------------------------------

@dataclass
class DerivationTree:
    fact: Fact
    kind: str  # "input" | "fact" | "rule"
    rule: str | None
    line: int | None
    bindings: dict[str, Value]
    children: list["DerivationTree"]
    checks: list[dict]


def explain(fact: Atom | Fact, index: ProvenanceIndex) -> DerivationTree:
    """Build the derivation tree for a ground fact (memoized, shared subtrees)."""
    if isinstance(fact, Atom):
        key: Fact = (fact.relation, tuple(constant_value(a) for a in fact.args))
    else:
        key = (fact[0], tuple(fact[1]))
    memo: dict[Fact, DerivationTree] = {}

    def build(f: Fact) -> DerivationTree:
        if f in memo:
            return memo[f]
        just = index.justification(*f)
        if isinstance(just, InputFact):
            node = DerivationTree(f, "input", None, None, {}, [], [])
        elif isinstance(just, TextFact):
            node = DerivationTree(f, "fact", None, just.line, {}, [], [])
        else:
            node = DerivationTree(
                fact=f,
                kind="rule",
                rule=just.rule_text,
                line=just.line,
                bindings=dict(just.bindings),
                children=[],
                checks=[dict(c) for c in just.checks],
            )
        memo[f] = node
        if isinstance(just, RuleInstance):
            node.children = [build(child) for child in just.children]
        return node

    return build(key)


def render_tree(tree: DerivationTree, format: str = "text") -> str | dict:
    """Render a tree as an indented text outline or a structured document.

    The structured document mirrors the tree fields exactly (fact, rule,
    line, bindings, children, checks) and is the wire format served by the
    HTTP explain endpoint.
    """
    if format == "text":
        lines: list[str] = []

        def emit(node: DerivationTree, depth: int) -> None:
            fact_text = render_fact(*node.fact)
            if node.kind == "input":
                source = "input"
            elif node.kind == "fact":
                source = f"fact@{node.line}"
            else:
                bound = ", ".join(f"{k}={format_value(v)}" for k, v in node.bindings.items())
                source = f"rule@{node.line} [{bound}]"
            lines.append("  " * depth + f"{fact_text} ⟵ {source}")
            for child in node.children:
                emit(child, depth + 1)

        emit(tree, 0)
        return "\n".join(lines)
    if format == "structured":
        return tree_to_doc(tree)
    raise ValueError(f"unknown render format: {format!r}")


def tree_to_doc(tree: DerivationTree) -> dict:
    return {
        "fact": {"relation": tree.fact[0], "args": list(tree.fact[1])},
        "rule": tree.rule,
        "line": tree.line,
        "bindings": dict(tree.bindings),
        "children": [tree_to_doc(c) for c in tree.children],
        "checks": [dict(c) for c in tree.checks],
    }


def tree_from_doc(doc: dict) -> DerivationTree:
    fact = (doc["fact"]["relation"], tuple(doc["fact"]["args"]))
    rule = doc.get("rule")
    line = doc.get("line")
    if rule is not None:
        kind = "rule"
    elif line is not None:
        kind = "fact"
    else:
        kind = "input"
    return DerivationTree(
        fact=fact,
        kind=kind,
        rule=rule,
        line=line,
        bindings=dict(doc.get("bindings", {})),
        children=[tree_from_doc(c) for c in doc.get("children", [])],
        checks=[dict(c) for c in doc.get("checks", [])],
    )
