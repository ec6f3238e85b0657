"""Static checks for candidate programs, program diffs and dataset scoring.

Lint codes:

    L0  syntax error
    L1  undeclared relation          L5  negation/aggregation cycle
    L2  arity mismatch               L6  output relation never derived (warning)
    L3  type mismatch                L7  input relation never read (warning)
    L4  unsafe variable              L8  diagnosis rules not mutually exclusive (warning)

L8 is a syntactic heuristic: two rules producing distinct disorders for the
same patient variable are flagged unless their bodies contradict, either by
opposite polarity on a compatible atom or by disjoint numeric bounds on the
same bound column.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .datalog import analysis
from .datalog.analysis import check_safety, expand_disjunctions
from .datalog.engine import evaluate
from .datalog.lang import (
    Atom,
    Constraint,
    FactStore,
    FloatConst,
    Negated,
    NumberConst,
    Positive,
    Program,
    Rule,
    Span,
    SymbolConst,
    Variable,
    Wildcard,
    constant_value,
    render_rule,
    term_aggregates,
)
from .datalog.parser import parse_with_errors
from .datalog.stratify import CycleError, stratify

if TYPE_CHECKING:
    from .patients import PatientDataset

_KIND_TO_CODE = {
    analysis.UNDECLARED: "L1",
    analysis.ARITY: "L2",
    analysis.TYPE: "L3",
    analysis.UNSAFE: "L4",
}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: Span | None = None

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span is not None and self.span.line else ""
        return f"{self.severity} {self.code}: {where}{self.message}"


# ---------------------------------------------------------------------------
# lint
# ---------------------------------------------------------------------------

def lint(source: str) -> list[Diagnostic]:
    """Parse, check and stratify, reporting every finding as a Diagnostic."""
    program, parse_errors = parse_with_errors(source)
    if parse_errors:
        return [
            Diagnostic("error", "L0", e.message, Span(e.line, e.col)) for e in parse_errors
        ]
    expanded = expand_disjunctions(program)
    findings: list[Diagnostic] = []
    for err in check_safety(expanded):
        findings.append(Diagnostic("error", _KIND_TO_CODE[err.kind], err.message, err.span))
    try:
        stratify(expanded)
    except CycleError as cycle:
        names = " -> ".join(cycle.relations + cycle.relations[:1])
        findings.append(
            Diagnostic(
                "error",
                "L5",
                f"negation/aggregation cycle: {names}",
                cycle.spans[0] if cycle.spans else None,
            )
        )
    findings.extend(_warn_never_derived(expanded))
    findings.extend(_warn_never_read(expanded))
    findings.extend(_warn_exclusivity(expanded))
    return findings


def _warn_never_derived(program: Program) -> list[Diagnostic]:
    derived = {rule.head.relation for rule in program.rules}
    derived.update(fact.relation for fact in program.ground_facts)
    return [
        Diagnostic("warning", "L6", f"output relation {name} is never derived")
        for name in program.outputs
        if name not in derived
    ]


def _warn_never_read(program: Program) -> list[Diagnostic]:
    read: set[str] = set()
    for rule in program.rules:
        for lit in rule.literals():
            if isinstance(lit, (Positive, Negated)):
                read.add(lit.atom.relation)
            elif isinstance(lit, Constraint):
                for side in (lit.lhs, lit.rhs):
                    for agg in term_aggregates(side):
                        read.add(agg.target.relation)
        for arg in rule.head.args:
            for agg in term_aggregates(arg):
                read.add(agg.target.relation)
    return [
        Diagnostic("warning", "L7", f"input relation {name} is never read")
        for name in program.inputs
        if name not in read
    ]


# -- L8: mutually exclusive diagnoses ---------------------------------------

_NEG_INF = float("-inf")
_POS_INF = float("inf")


@dataclass
class _Bounds:
    lo: float = _NEG_INF
    lo_incl: bool = True
    hi: float = _POS_INF
    hi_incl: bool = True

    def narrow(self, op: str, value: float) -> None:
        if op == "=":
            self.narrow(">=", value)
            self.narrow("<=", value)
        elif op == "<":
            if value < self.hi or (value == self.hi and self.hi_incl):
                self.hi, self.hi_incl = value, False
        elif op == "<=":
            if value < self.hi:
                self.hi, self.hi_incl = value, True
        elif op == ">":
            if value > self.lo or (value == self.lo and self.lo_incl):
                self.lo, self.lo_incl = value, False
        elif op == ">=":
            if value > self.lo:
                self.lo, self.lo_incl = value, True

    def disjoint(self, other: "_Bounds") -> bool:
        lo, lo_incl = max(
            (self.lo, self.lo_incl), (other.lo, other.lo_incl), key=lambda b: (b[0], not b[1])
        )
        hi, hi_incl = min(
            (self.hi, self.hi_incl), (other.hi, other.hi_incl), key=lambda b: (b[0], b[1])
        )
        if lo < hi:
            return False
        if lo > hi:
            return True
        return not (lo_incl and hi_incl)


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "="}


def _rule_profile(rule: Rule):
    """Atoms (with the patient variable normalized) and per-column bounds."""
    patient = rule.head.args[0]
    patient_name = patient.name if isinstance(patient, Variable) else None

    def norm_args(atom: Atom) -> tuple:
        out = []
        for arg in atom.args:
            if isinstance(arg, Variable):
                out.append("@P" if arg.name == patient_name else "?")
            elif isinstance(arg, Wildcard):
                out.append("?")
            else:
                out.append(("const", constant_value(arg)))
        return tuple(out)

    positives: list[tuple[str, tuple]] = []
    negatives: list[tuple[str, tuple]] = []
    var_slots: dict[str, tuple[str, int]] = {}
    for lit in rule.literals():
        if isinstance(lit, Positive):
            positives.append((lit.atom.relation, norm_args(lit.atom)))
            for i, arg in enumerate(lit.atom.args):
                if isinstance(arg, Variable) and arg.name not in var_slots:
                    var_slots[arg.name] = (lit.atom.relation, i)
        elif isinstance(lit, Negated):
            negatives.append((lit.atom.relation, norm_args(lit.atom)))

    bounds: dict[tuple[str, int], _Bounds] = {}
    for lit in rule.literals():
        if not isinstance(lit, Constraint):
            continue
        for var_side, const_side, op in (
            (lit.lhs, lit.rhs, lit.op),
            (lit.rhs, lit.lhs, _FLIP.get(lit.op, lit.op)),
        ):
            if isinstance(var_side, Variable) and isinstance(const_side, (NumberConst, FloatConst)):
                slot = var_slots.get(var_side.name)
                if slot is not None:
                    bounds.setdefault(slot, _Bounds()).narrow(op, float(const_side.value))
    return positives, negatives, bounds


def _compatible(a: tuple, b: tuple) -> bool:
    """Two normalized atom arg tuples that could ground to the same fact."""
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if isinstance(x, tuple) and isinstance(y, tuple) and x != y:
            return False
    return True


def _bodies_contradict(profile_a, profile_b) -> bool:
    pos_a, neg_a, bounds_a = profile_a
    pos_b, neg_b, bounds_b = profile_b
    for rel, args in pos_a:
        for rel2, args2 in neg_b:
            if rel == rel2 and _compatible(args, args2):
                return True
    for rel, args in pos_b:
        for rel2, args2 in neg_a:
            if rel == rel2 and _compatible(args, args2):
                return True
    for slot, ba in bounds_a.items():
        bb = bounds_b.get(slot)
        if bb is not None and ba.disjoint(bb):
            return True
    return False


def _warn_exclusivity(program: Program) -> list[Diagnostic]:
    candidates: dict[str, list[tuple[str, Rule]]] = {}
    for rule in program.rules:
        head = rule.head
        if head.relation not in program.outputs or len(head.args) < 2:
            continue
        if isinstance(head.args[0], Variable) and isinstance(head.args[1], SymbolConst):
            candidates.setdefault(head.relation, []).append((head.args[1].text, rule))

    warnings: list[Diagnostic] = []
    flagged: set[tuple[str, str]] = set()
    for relation, rules in candidates.items():
        profiles = [(label, rule, _rule_profile(rule)) for label, rule in rules]
        for i in range(len(profiles)):
            for j in range(i + 1, len(profiles)):
                label_a, rule_a, prof_a = profiles[i]
                label_b, rule_b, prof_b = profiles[j]
                if label_a == label_b:
                    continue
                pair = tuple(sorted((label_a, label_b)))
                if pair in flagged:
                    continue
                if not _bodies_contradict(prof_a, prof_b):
                    flagged.add(pair)  # type: ignore[arg-type]
                    warnings.append(
                        Diagnostic(
                            "warning",
                            "L8",
                            f"{relation} rules for {pair[0]} and {pair[1]} have no mutual "
                            f"exclusion and may both fire for the same patient",
                            rule_b.span,
                        )
                    )
    return warnings


# ---------------------------------------------------------------------------
# diff
# ---------------------------------------------------------------------------

class ProgramDiffError(Exception):
    def __init__(self, side: str, errors):
        super().__init__(f"{side} does not parse: " + "; ".join(str(e) for e in errors[:3]))
        self.side = side
        self.errors = errors


@dataclass
class RuleDiff:
    added_rules: list[str]
    removed_rules: list[str]
    unchanged_rules: list[str]
    lines_added: int
    lines_removed: int
    lines_before: int
    lines_after: int


def _canonical_rule(rule: Rule) -> str:
    mapping: dict[str, str] = {}

    def rename(r: Rule) -> Rule:
        from .datalog import lang

        def term(t):
            if isinstance(t, Variable):
                if t.name not in mapping:
                    mapping[t.name] = f"v{len(mapping)}"
                return Variable(mapping[t.name])
            if isinstance(t, lang.ArithExpr):
                return lang.ArithExpr(t.op, term(t.left), term(t.right))
            if isinstance(t, lang.CountAggregate):
                return lang.CountAggregate(atom(t.target))
            return t

        def atom(a: Atom) -> Atom:
            return Atom(a.relation, tuple(term(x) for x in a.args))

        def elem(e):
            if isinstance(e, Positive):
                return Positive(atom(e.atom))
            if isinstance(e, Negated):
                return Negated(atom(e.atom))
            if isinstance(e, Constraint):
                return Constraint(e.op, term(e.lhs), term(e.rhs))
            return lang.Disjunction(
                tuple(tuple(elem(x) for x in alt) for alt in e.alternatives)
            )

        return Rule(atom(r.head), tuple(elem(e) for e in r.body))

    return render_rule(rename(rule))


def _normalized_lines(source: str) -> Counter:
    counted: Counter = Counter()
    for raw in source.split("\n"):
        line = _strip_comment(raw).strip()
        if line:
            counted[" ".join(line.split())] += 1
    return counted


def _strip_comment(line: str) -> str:
    in_string = False
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == '"' and (i == 0 or line[i - 1] != "\\"):
            in_string = not in_string
        elif ch == "/" and not in_string and line.startswith("//", i):
            return line[:i]
        i += 1
    return line


def diff_programs(candidate: str, reference: str) -> RuleDiff:
    """Rule-level diff (variable-renaming-insensitive) plus line accounting.

    ``candidate`` is the before side, ``reference`` the after side.
    """
    cand_prog, cand_errors = parse_with_errors(candidate)
    if cand_errors:
        raise ProgramDiffError("candidate", cand_errors)
    ref_prog, ref_errors = parse_with_errors(reference)
    if ref_errors:
        raise ProgramDiffError("reference", ref_errors)

    def rule_set(program: Program) -> set[str]:
        canon = {_canonical_rule(rule) for rule in program.rules}
        canon.update(render_rule(Rule(fact, ())) for fact in program.ground_facts)
        return canon

    before = rule_set(cand_prog)
    after = rule_set(ref_prog)
    before_lines = _normalized_lines(candidate)
    after_lines = _normalized_lines(reference)
    return RuleDiff(
        added_rules=sorted(after - before),
        removed_rules=sorted(before - after),
        unchanged_rules=sorted(before & after),
        lines_added=sum((after_lines - before_lines).values()),
        lines_removed=sum((before_lines - after_lines).values()),
        lines_before=sum(before_lines.values()),
        lines_after=sum(after_lines.values()),
    )


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

DIAGNOSIS_RELATION = "Diagnosis"


class ScoreRefused(Exception):
    """Candidate rejected before evaluation; carries the lint findings."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics[:5]))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class ScoreRow:
    patient: str
    expected: str | None
    produced: tuple[str, ...]
    verdict: str  # "correct" | "partial" | "wrong" | "none"


@dataclass
class ScoreReport:
    rows: list[ScoreRow]
    correct: int
    partial: int
    total: int
    breakdown: dict[str, int] = field(default_factory=dict)
    undiagnosed: int = 0

    @property
    def perfect(self) -> bool:
        return self.correct == self.total

    def totals_label(self) -> str:
        if self.partial:
            return f"({self.correct}+{self.partial})/{self.total}"
        return f"{self.correct}/{self.total}"

    def to_tsv(self) -> str:
        lines = ["\t".join(("patient", "expected", "produced", "verdict"))]
        for row in self.rows:
            produced = ",".join(row.produced) if row.produced else "-"
            lines.append(
                "\t".join((row.patient, row.expected or "-", produced, row.verdict))
            )
        lines.append("\t".join(("Correct Diagnosis (Total):", "", "", self.totals_label())))
        return "\n".join(lines) + "\n"


def _verdict(expected: str | None, produced: tuple[str, ...]) -> str:
    if expected is None:
        return "correct" if not produced else "wrong"
    if not produced:
        return "none"
    if produced == (expected,):
        return "correct"
    if expected in produced:
        return "partial"
    return "wrong"


def score_candidate(candidate: str, dataset: "PatientDataset") -> ScoreReport:
    """Evaluate a candidate program over every patient and grade the output.

    Raises ScoreRefused when the candidate lints with errors or does not
    expose the Diagnosis(patient, disorder) interface.
    """
    from .patients import to_fact_store

    findings = lint(candidate)
    errors = [d for d in findings if d.severity == "error"]
    if errors:
        raise ScoreRefused(errors)

    program = expand_disjunctions(parse_with_errors(candidate)[0])
    decl = program.declarations.get(DIAGNOSIS_RELATION)
    if decl is None:
        raise ScoreRefused(
            [Diagnostic("error", "L1", f"candidate does not declare {DIAGNOSIS_RELATION}")]
        )
    if decl.arity < 2 or decl.types[0] != "symbol" or decl.types[1] != "symbol":
        raise ScoreRefused(
            [
                Diagnostic(
                    "error",
                    "L3",
                    f"{DIAGNOSIS_RELATION} must start with (patient:symbol, disorder:symbol)",
                )
            ]
        )
    plan = stratify(program)

    full_store = to_fact_store(dataset)
    input_store = FactStore()
    for relation in ("Observed", "History"):
        if program.declared(relation):
            input_store.ensure_relation(relation)
            for tup in full_store.tuples(relation):
                input_store.add(relation, tup)
    result = evaluate(plan, input_store)

    produced_by_patient: dict[str, set[str]] = {}
    for tup in result.tuples(DIAGNOSIS_RELATION):
        produced_by_patient.setdefault(str(tup[0]), set()).add(str(tup[1]))

    rows: list[ScoreRow] = []
    breakdown: dict[str, int] = {}
    undiagnosed = 0
    for record in dataset.records:
        if record.id not in dataset.expected_disorder:
            raise ValueError(f"missing expected label for patient {record.id!r}")
        expected = dataset.expected_disorder[record.id]
        produced = tuple(sorted(produced_by_patient.get(record.id, set())))
        rows.append(ScoreRow(record.id, expected, produced, _verdict(expected, produced)))
        if len(produced) == 1:
            breakdown[produced[0]] = breakdown.get(produced[0], 0) + 1
        elif not produced:
            undiagnosed += 1
    correct = sum(1 for r in rows if r.verdict == "correct")
    partial = sum(1 for r in rows if r.verdict == "partial")
    return ScoreReport(
        rows=rows,
        correct=correct,
        partial=partial,
        total=len(rows),
        breakdown=breakdown,
        undiagnosed=undiagnosed,
    )
