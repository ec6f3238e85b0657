from __future__ import annotations

import random

import pytest

from moodlogic.datalog import FactStore, evaluate, expand_disjunctions, parse, stratify
from moodlogic.datalog.lang import (
    Constraint,
    CountAggregate,
    Negated,
    Positive,
    Variable,
    Wildcard,
    constant_value,
)
from moodlogic.provenance import (
    NotDerived,
    evaluate_with_provenance,
    explain,
    render_tree,
    tree_from_doc,
    tree_to_doc,
)

from randprog import random_program


def _plan(source: str):
    return stratify(expand_disjunctions(parse(source)))


def _edge_run(edge_path_source):
    plan = _plan(edge_path_source)
    store = FactStore.from_dict({"Edge": [(1, 2), (2, 3)]})
    return plan, evaluate_with_provenance(plan, store)


def test_path_tree_structure(edge_path_source):
    plan, (result, index) = _edge_run(edge_path_source)
    tree = explain(("Path", (1, 3)), index)
    assert tree.kind == "rule"
    assert [c.fact for c in tree.children] == [("Path", (1, 2)), ("Edge", (2, 3))]
    assert tree.bindings == {"x": 1, "z": 2, "y": 3}
    edge_leaf = tree.children[1]
    assert edge_leaf.kind == "input"


def test_input_fact_is_leaf(edge_path_source):
    _, (result, index) = _edge_run(edge_path_source)
    tree = explain(("Edge", (1, 2)), index)
    assert tree.kind == "input"
    assert render_tree(tree, "text") == "Edge(1, 2) ⟵ input"


def test_text_outline_one_line_per_node(edge_path_source):
    _, (result, index) = _edge_run(edge_path_source)
    text = render_tree(explain(("Path", (1, 3)), index), "text")
    lines = text.split("\n")
    assert len(lines) == 4
    assert lines[0].startswith("Path(1, 3) ⟵ rule@")
    assert lines[1].startswith("  Path(1, 2) ⟵ rule@")
    assert lines[2].startswith("    Edge(1, 2) ⟵ input")
    assert lines[3].startswith("  Edge(2, 3) ⟵ input")


def test_explain_absent_tuple(edge_path_source):
    _, (result, index) = _edge_run(edge_path_source)
    with pytest.raises(NotDerived) as exc:
        explain(("Path", (3, 1)), index)
    assert exc.value.reason == "absent"
    with pytest.raises(NotDerived) as exc:
        explain(("Ghost", (1,)), index)
    assert exc.value.reason == "unknown_relation"


def test_structured_round_trip(edge_path_source, diagnosis_source):
    _, (result, index) = _edge_run(edge_path_source)
    tree = explain(("Path", (1, 3)), index)
    doc = render_tree(tree, "structured")
    assert tree_from_doc(doc) == tree

    plan = _plan(diagnosis_source)
    store = FactStore.from_dict(
        {
            "Observed": [("PatientA", "SymptomA", 3.5), ("PatientA", "SymptomB", 3.5)],
            "History": [("PatientA", "ConditionC", 2)],
        }
    )
    _, diag_index = evaluate_with_provenance(plan, store)
    diag_tree = explain(("Diagnosis", ("PatientA", "DisorderD")), diag_index)
    doc = tree_to_doc(diag_tree)
    assert set(doc) == {"fact", "rule", "line", "bindings", "children", "checks"}
    assert tree_from_doc(doc) == diag_tree


def test_diagnosis_tree_cites_counts_and_history(diagnosis_source):
    plan = _plan(diagnosis_source)
    store = FactStore.from_dict(
        {
            "Observed": [("PatientA", "SymptomA", 3.5), ("PatientA", "SymptomB", 3.5)],
            "History": [("PatientA", "ConditionC", 2)],
        }
    )
    result, index = evaluate_with_provenance(plan, store)
    tree = explain(("Diagnosis", ("PatientA", "DisorderD")), index)
    child_facts = {c.fact for c in tree.children}
    assert ("CoreCount", ("PatientA", 2)) in child_facts
    assert ("TotalCount", ("PatientA", 2)) in child_facts
    assert ("History", ("PatientA", "ConditionC", 2)) in child_facts
    constraint_checks = [c for c in tree.checks if c["kind"] == "constraint"]
    assert len(constraint_checks) == 3
    assert all(c["holds"] for c in constraint_checks)


def test_zero_default_tree_records_absence(diagnosis_source):
    plan = _plan(diagnosis_source)
    store = FactStore.from_dict({"Observed": [("PatientB", "SymptomC", 3.0)]})
    result, index = evaluate_with_provenance(plan, store)
    tree = explain(("CoreCount", ("PatientB", 0)), index)
    absents = [c for c in tree.checks if c["kind"] == "absent"]
    assert len(absents) == 1
    assert absents[0]["relation"] == "Core"
    assert '"PatientB"' in absents[0]["pattern"]


def test_aggregate_evidence_lists_counted_tuples(diagnosis_source):
    plan = _plan(diagnosis_source)
    store = FactStore.from_dict(
        {"Observed": [("PatientA", "SymptomA", 3.5), ("PatientA", "SymptomB", 3.5)]}
    )
    result, index = evaluate_with_provenance(plan, store)
    tree = explain(("CoreCount", ("PatientA", 2)), index)
    counts = [c for c in tree.checks if c["kind"] == "count"]
    assert len(counts) == 1
    assert counts[0]["value"] == 2
    assert sorted(t[1] for t in counts[0]["tuples"]) == ["SymptomA", "SymptomB"]


def test_program_text_facts_are_leaves():
    source = ".decl Pole(s:symbol)\n.decl Hit(s:symbol)\nPole(\"a\").\nHit(s) :- Pole(s).\n"
    plan = _plan(source)
    result, index = evaluate_with_provenance(plan, FactStore())
    tree = explain(("Hit", ("a",)), index)
    leaf = tree.children[0]
    assert leaf.kind == "fact"
    assert leaf.line is not None
    assert tree_from_doc(tree_to_doc(tree)) == tree


def test_plain_and_provenance_agree(edge_path_source, diagnosis_source):
    for source, facts in (
        (edge_path_source, {"Edge": [(1, 2), (2, 3), (3, 4)]}),
        (
            diagnosis_source,
            {"Observed": [("P", "SymptomA", 2.0), ("P", "SymptomD", 2.5)]},
        ),
    ):
        plan = _plan(source)
        plain = evaluate(plan, FactStore.from_dict(facts))
        with_prov, _ = evaluate_with_provenance(plan, FactStore.from_dict(facts))
        assert plain == with_prov


def test_random_programs_plain_provenance_agree_and_cover():
    for seed in range(25):
        rng = random.Random(50_000 + seed)
        source, input_facts = random_program(rng)
        plan = _plan(source)
        store = FactStore.from_dict(input_facts)
        plain = evaluate(plan, store)
        result, index = evaluate_with_provenance(plan, store)
        assert plain == result, f"seed {seed}"
        for relation in result.relations():
            for tup in result.tuples(relation):
                assert index.covered(relation, tup), f"seed {seed}: {relation}{tup}"


# ---------------------------------------------------------------------------
# Replay: rebuild every node's fact from its rule text and bindings
# ---------------------------------------------------------------------------

def _term_value(term, bindings, result):
    from moodlogic.datalog.lang import ArithExpr

    if isinstance(term, Variable):
        return bindings[term.name]
    if isinstance(term, CountAggregate):
        return _recount(term, bindings, result)
    if isinstance(term, ArithExpr):
        left = _term_value(term.left, bindings, result)
        right = _term_value(term.right, bindings, result)
        if term.op == "+":
            return left + right
        if term.op == "-":
            return left - right
        if term.op == "*":
            return left * right
        return left / right
    return constant_value(term)


def _recount(agg, bindings, result) -> int:
    total = 0
    for tup in result.tuples(agg.target.relation):
        ok = True
        for arg, value in zip(agg.target.args, tup):
            if isinstance(arg, Variable) and arg.name in bindings:
                if bindings[arg.name] != value:
                    ok = False
                    break
            elif isinstance(arg, (Variable, Wildcard)):
                continue
            elif constant_value(arg) != value:
                ok = False
                break
        if ok:
            total += 1
    return total


def _pattern_absent(atom, bindings, result) -> bool:
    for tup in result.tuples(atom.relation):
        ok = True
        for arg, value in zip(atom.args, tup):
            if isinstance(arg, Variable):
                if bindings[arg.name] != value:
                    ok = False
                    break
            elif isinstance(arg, Wildcard):
                continue
            elif constant_value(arg) != value:
                ok = False
                break
        if ok:
            return False
    return True


def replay_tree(tree, result, initial) -> bool:
    """Independent bottom-up check that a tree really derives its root."""
    if tree.kind in ("input", "fact"):
        return initial.contains(*tree.fact)
    rule_program = parse(tree.rule)
    (rule,) = rule_program.rules
    bindings = tree.bindings

    head_tuple = tuple(_term_value(arg, bindings, result) for arg in rule.head.args)
    if (rule.head.relation, head_tuple) != tree.fact:
        return False

    positives = [lit for lit in rule.literals() if isinstance(lit, Positive)]
    if len(positives) != len(tree.children):
        return False
    for literal, child in zip(positives, tree.children):
        if literal.atom.relation != child.fact[0]:
            return False
        for arg, value in zip(literal.atom.args, child.fact[1]):
            if isinstance(arg, Variable):
                if bindings[arg.name] != value:
                    return False
            elif isinstance(arg, Wildcard):
                continue
            elif constant_value(arg) != value:
                return False
        if not replay_tree(child, result, initial):
            return False

    for literal in rule.literals():
        if isinstance(literal, Negated):
            if not _pattern_absent(literal.atom, bindings, result):
                return False
        elif isinstance(literal, Constraint):
            lhs = _term_value(literal.lhs, bindings, result)
            rhs = _term_value(literal.rhs, bindings, result)
            holds = {
                "=": lhs == rhs,
                "!=": lhs != rhs,
                "<": lhs < rhs,
                "<=": lhs <= rhs,
                ">": lhs > rhs,
                ">=": lhs >= rhs,
            }[literal.op]
            if not holds:
                return False
    return True


def _initial_store(plan, input_store):
    seeded = input_store.copy()
    for fact in plan.program.ground_facts:
        seeded.add(fact.relation, tuple(constant_value(a) for a in fact.args))
    return seeded


def test_replay_soundness_on_random_programs():
    for seed in range(25):
        rng = random.Random(60_000 + seed)
        source, input_facts = random_program(rng)
        plan = _plan(source)
        store = FactStore.from_dict(input_facts)
        result, index = evaluate_with_provenance(plan, store)
        initial = _initial_store(plan, store)
        for relation, tup in index.derived_facts():
            tree = explain((relation, tup), index)
            assert replay_tree(tree, result, initial), f"seed {seed}: {relation}{tup}\n{source}"
