"""The bundled mood-disorder program plus typed diagnosis wrappers.

The wrappers add no logic of their own: they build facts from a record, run
the bundled program and read the Diagnosis and episode relations back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .datalog.analysis import expand_disjunctions
from .datalog.engine import evaluate
from .datalog.lang import DatalogError, FactStore
from .datalog.parser import parse
from .datalog.stratify import StratifiedPlan, stratify
from .patients import PatientDataset, PatientRecord, to_fact_store, validate_record
from .provenance import ProvenanceIndex, evaluate_with_provenance
from .validator import Diagnostic, ScoreReport, ScoreRow, score_candidate
from . import vocabulary

EPISODE_RELATIONS = {
    "depressive": "DepressiveEpisode",
    "manic": "ManicEpisode",
    "mixed": "MixedEpisode",
    "hypomanic": "HypomanicEpisode",
}


class RecordInvalid(DatalogError):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics[:5]))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class EpisodeSet:
    depressive: bool = False
    manic: bool = False
    mixed: bool = False
    hypomanic: bool = False

    def names(self) -> frozenset[str]:
        return frozenset(
            name for name in EPISODE_RELATIONS if getattr(self, name)
        )

    @classmethod
    def from_names(cls, names) -> "EpisodeSet":
        names = set(names)
        return cls(**{key: key in names for key in EPISODE_RELATIONS})


@dataclass
class DiagnosisResult:
    patient_id: str
    disorders: frozenset[str] = frozenset()
    episodes: EpisodeSet = EpisodeSet()
    issues: list[Diagnostic] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(d.severity == "error" for d in self.issues)

    def disorder_label(self) -> str:
        return ",".join(sorted(self.disorders)) if self.disorders else "-"


def bundled_program() -> str:
    """Source text of the finalized mood-disorder rule program."""
    return (resources.files("moodlogic") / "assets" / "mood_cddr.dl").read_text(
        encoding="utf-8"
    )


def bundled_dataset_path() -> str:
    return str(resources.files("moodlogic") / "assets" / "patients_mood30.tsv")


@lru_cache(maxsize=1)
def analyzed_plan() -> StratifiedPlan:
    """One shared analysis of the bundled program (immutable, thread-safe)."""
    program = expand_disjunctions(parse(bundled_program()))
    return stratify(program)


def _episodes_from_store(store: FactStore, patient_id: str) -> EpisodeSet:
    return EpisodeSet(
        **{
            name: store.contains(relation, (patient_id,))
            for name, relation in EPISODE_RELATIONS.items()
        }
    )


def _disorders_from_store(store: FactStore, patient_id: str) -> frozenset[str]:
    return frozenset(
        str(disorder) for patient, disorder in store.tuples("Diagnosis") if patient == patient_id
    )


def classify_episodes(record: PatientRecord) -> EpisodeSet:
    """Current-episode flags per the bundled program's episode relations."""
    return diagnose(record).episodes


def _restrict_to_declared(store: FactStore, plan: StratifiedPlan) -> FactStore:
    restricted = FactStore()
    for relation in store.relations():
        if plan.program.declared(relation):
            restricted.ensure_relation(relation)
            for tup in store.tuples(relation):
                restricted.add(relation, tup)
    return restricted


def diagnose(record: PatientRecord, with_provenance: bool = False, plan: StratifiedPlan | None = None):
    """Run the rule program (bundled by default) for one patient.

    Returns a DiagnosisResult, or (DiagnosisResult, ProvenanceIndex) when
    ``with_provenance`` is set. Validation errors raise RecordInvalid;
    warnings (unknown names) are carried on the result.
    """
    issues = validate_record(record)
    if any(d.severity == "error" for d in issues):
        raise RecordInvalid(issues)
    if plan is None:
        plan = analyzed_plan()
    store = _restrict_to_declared(to_fact_store(record), plan)
    index: ProvenanceIndex | None = None
    if with_provenance:
        result, index = evaluate_with_provenance(plan, store)
    else:
        result = evaluate(plan, store)
    outcome = DiagnosisResult(
        patient_id=record.id,
        disorders=_disorders_from_store(result, record.id),
        episodes=_episodes_from_store(result, record.id),
        issues=issues,
    )
    if with_provenance:
        return outcome, index
    return outcome


def diagnose_all(dataset: PatientDataset, plan: StratifiedPlan | None = None) -> list[DiagnosisResult]:
    """Diagnose every record, reusing one analysis and one batch evaluation.

    Records that fail validation are reported in place (issues set, no
    disorders); the remaining patients are still processed.
    """
    if plan is None:
        plan = analyzed_plan()
    valid: list[PatientRecord] = []
    issues_by_id: dict[str, list[Diagnostic]] = {}
    for record in dataset.records:
        issues = validate_record(record)
        issues_by_id[record.id] = issues
        if not any(d.severity == "error" for d in issues):
            valid.append(record)

    batch = PatientDataset(records=valid)
    result = evaluate(plan, _restrict_to_declared(to_fact_store(batch), plan))

    outcomes: list[DiagnosisResult] = []
    valid_ids = {r.id for r in valid}
    for record in dataset.records:
        if record.id not in valid_ids:
            outcomes.append(DiagnosisResult(patient_id=record.id, issues=issues_by_id[record.id]))
            continue
        outcomes.append(
            DiagnosisResult(
                patient_id=record.id,
                disorders=_disorders_from_store(result, record.id),
                episodes=_episodes_from_store(result, record.id),
                issues=issues_by_id[record.id],
            )
        )
    return outcomes


def benchmark(dataset: PatientDataset, expected: dict[str, str | None] | None = None) -> ScoreReport:
    """Score the bundled program against the expected disorder labels."""
    if expected is not None:
        dataset = PatientDataset(
            records=dataset.records,
            expected_disorder=dict(expected),
            expected_episodes=dict(dataset.expected_episodes),
        )
    for record in dataset.records:
        if record.id not in dataset.expected_disorder:
            raise ValueError(f"missing expected label for patient {record.id!r}")
    return score_candidate(bundled_program(), dataset)


def episode_benchmark(dataset: PatientDataset) -> ScoreReport:
    """Compare derived episode flags against the expected episode labels."""
    for record in dataset.records:
        if record.id not in dataset.expected_episodes:
            raise ValueError(f"missing expected episodes for patient {record.id!r}")
    rows: list[ScoreRow] = []
    for outcome in diagnose_all(dataset):
        expected = dataset.expected_episodes[outcome.patient_id]
        produced = tuple(sorted(outcome.episodes.names()))
        verdict = "correct" if frozenset(produced) == expected else "wrong"
        expected_label = ",".join(sorted(expected)) if expected else None
        rows.append(ScoreRow(outcome.patient_id, expected_label, produced, verdict))
    correct = sum(1 for r in rows if r.verdict == "correct")
    return ScoreReport(rows=rows, correct=correct, partial=0, total=len(rows))


def load_bundled_dataset() -> PatientDataset:
    from .patients import load_patient_table

    return load_patient_table(bundled_dataset_path())


def vocabulary_document() -> dict:
    return vocabulary.vocabulary_document()
