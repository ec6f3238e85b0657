from __future__ import annotations

from moodlogic.datalog import check_safety, expand_disjunctions, parse, render_rule
from moodlogic.datalog.analysis import ARITY, TYPE, UNDECLARED, UNSAFE

DECLS = ".decl A(x:number)\n.decl B(x:number)\n.decl C(x:number)\n.decl H(x:number)\n"


def _expand_texts(source: str) -> list[str]:
    program = expand_disjunctions(parse(source))
    return [render_rule(r) for r in program.rules]


def test_expand_single_group():
    texts = _expand_texts(DECLS + "H(x) :- A(x), (B(x); C(x)).\n")
    assert texts == ["H(x) :- A(x), B(x).", "H(x) :- A(x), C(x)."]


def test_expand_identity_without_groups():
    program = parse(DECLS + "H(x) :- A(x), B(x).\n")
    expanded = expand_disjunctions(program)
    assert expanded.rules == program.rules


def test_expand_top_level_disjunction():
    texts = _expand_texts(
        ".decl ManicEpisode(p:symbol)\n.decl MixedEpisode(p:symbol)\n"
        ".decl Diagnosis(p:symbol, d:symbol)\n"
        'Diagnosis(P, "Bipolar_I") :- ManicEpisode(P); MixedEpisode(P).\n'
    )
    assert texts == [
        'Diagnosis(P, "Bipolar_I") :- ManicEpisode(P).',
        'Diagnosis(P, "Bipolar_I") :- MixedEpisode(P).',
    ]


def test_expand_cross_product_order():
    texts = _expand_texts(DECLS + ".decl D(x:number)\nH(x) :- (A(x); B(x)), (C(x); D(x)).\n")
    assert texts == [
        "H(x) :- A(x), C(x).",
        "H(x) :- A(x), D(x).",
        "H(x) :- B(x), C(x).",
        "H(x) :- B(x), D(x).",
    ]


def test_expand_nested_groups():
    texts = _expand_texts(DECLS + ".decl D(x:number)\nH(x) :- (A(x); (B(x), (C(x); D(x)))).\n")
    assert texts == [
        "H(x) :- A(x).",
        "H(x) :- B(x), C(x).",
        "H(x) :- B(x), D(x).",
    ]


def test_expansion_keeps_source_span():
    program = parse(DECLS + "H(x) :- A(x), (B(x); C(x)).\n")
    expanded = expand_disjunctions(program)
    assert {r.span.line for r in expanded.rules} == {program.rules[0].span.line}


def _errors(source: str):
    return check_safety(expand_disjunctions(parse(source)))


def test_safety_listing2_clean(diagnosis_source):
    assert _errors(diagnosis_source) == []


def test_unsafe_negation_only_binding():
    errors = _errors(".decl A(x:number)\n.decl H(x:number)\nH(x) :- !A(x).\n")
    assert any(e.kind == UNSAFE and "x" in e.message for e in errors)


def test_unsafe_head_variable():
    errors = _errors(".decl A(x:number)\n.decl H(x:number)\nH(y) :- A(x).\n")
    assert any(e.kind == UNSAFE and "y" in e.message for e in errors)


def test_constraints_do_not_bind():
    errors = _errors(".decl A(x:number)\n.decl H(x:number)\nH(x) :- A(_), x = 1.\n")
    assert any(e.kind == UNSAFE for e in errors)


def test_aggregate_equality_binds_result():
    source = (
        ".decl T(x:number, y:number)\n.decl S(x:number)\n.decl H(x:number, n:number)\n"
        "H(x, n) :- S(x), n = count : T(x, _).\n"
    )
    assert _errors(source) == []


def test_aggregate_group_variable_must_be_bound():
    source = (
        ".decl T(x:number, y:number)\n.decl H(x:number, n:number)\n"
        "H(x, n) :- n = count : T(x, _), x = 1.\n"
    )
    errors = _errors(source)
    assert any(e.kind == UNSAFE for e in errors)


def test_undeclared_relation():
    errors = _errors(".decl H(x:number)\nH(x) :- Ghost(x).\n")
    assert any(e.kind == UNDECLARED and "Ghost" in e.message for e in errors)


def test_undeclared_input_directive():
    errors = _errors(".input Ghost\n")
    assert any(e.kind == UNDECLARED for e in errors)


def test_arity_mismatch():
    errors = _errors(".decl A(x:number, y:number)\n.decl H(x:number)\nH(x) :- A(x).\n")
    assert any(e.kind == ARITY for e in errors)


def test_type_mismatch_constant():
    errors = _errors('.decl A(x:number)\nA("sym").\n')
    assert any(e.kind == TYPE for e in errors)


def test_type_mismatch_variable_use():
    errors = _errors(
        ".decl A(x:number)\n.decl B(x:symbol)\n.decl H(x:number)\nH(x) :- A(x), B(x).\n"
    )
    assert any(e.kind == TYPE and "both" in e.message for e in errors)


def test_wildcard_in_head_rejected():
    errors = _errors(".decl A(x:number)\n.decl H(x:number)\nH(_) :- A(x).\n")
    assert any(e.kind == UNSAFE and "wildcard" in e.message for e in errors)


def test_arithmetic_over_symbols_rejected():
    errors = _errors(
        '.decl A(x:symbol)\n.decl H(x:symbol)\nH(x) :- A(x), x + 1 > 2.\n'
    )
    assert any(e.kind == TYPE and "arithmetic" in e.message for e in errors)


def test_ordered_comparison_on_symbols_rejected():
    errors = _errors('.decl A(x:symbol)\n.decl H(x:symbol)\nH(x) :- A(x), x < "b".\n')
    assert any(e.kind == TYPE and "ordered" in e.message for e in errors)


def test_symbol_number_comparison_rejected():
    errors = _errors('.decl A(x:symbol)\n.decl H(x:symbol)\nH(x) :- A(x), x = 3.\n')
    assert any(e.kind == TYPE for e in errors)


def test_expression_in_negated_atom_rejected_at_parse():
    from moodlogic.datalog import parse_with_errors

    _, errors = parse_with_errors(
        ".decl A(x:number)\n.decl H(x:number)\nH(x) :- A(x), !A(x + 1).\n"
    )
    assert errors


def test_mixed_number_float_comparison_allowed():
    source = ".decl A(x:float)\n.decl H(x:float)\nH(x) :- A(x), x >= 2.\n"
    assert _errors(source) == []
