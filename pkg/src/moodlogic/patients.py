"""Patient records: dataset TSV loading, validation and fact conversion.

Dataset files are tab-separated with a header ``id  kind  name  value`` and
one row per patient observation, history condition or expected label:

    kind=observed          name=symptom          value=weeks (float)
    kind=history           name=condition        value=count (int)
    kind=expected_disorder name=disorder or "-"  value empty
    kind=expected_episode  name=episode or "-"   value empty

Rows for one patient are contiguous; records keep file order.

Record diagnostics use codes R1 (bad duration), R2 (duplicate entry),
R3 (unknown name, warning) and R4 (bad count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .datalog.lang import FactStore, Program, Value
from .validator import Diagnostic
from . import vocabulary

KINDS = ("observed", "history", "expected_disorder", "expected_episode")
HEADER = ("id", "kind", "name", "value")
NO_LABEL = "-"


class PatientDataError(Exception):
    pass


@dataclass(frozen=True)
class Observation:
    symptom: str
    weeks: float


@dataclass(frozen=True)
class HistoryEntry:
    condition: str
    count: int


@dataclass
class PatientRecord:
    id: str
    observed: list[Observation] = field(default_factory=list)
    history: list[HistoryEntry] = field(default_factory=list)


@dataclass
class PatientDataset:
    records: list[PatientRecord] = field(default_factory=list)
    # Expected disorder per patient id; None means labeled as no diagnosis.
    expected_disorder: dict[str, str | None] = field(default_factory=dict)
    expected_episodes: dict[str, frozenset[str]] = field(default_factory=dict)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def record(self, patient_id: str) -> PatientRecord:
        for r in self.records:
            if r.id == patient_id:
                return r
        raise KeyError(patient_id)


# ---------------------------------------------------------------------------
# Dataset TSV
# ---------------------------------------------------------------------------

def load_patient_table(path: str | Path) -> PatientDataset:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise PatientDataError(f"{path}: empty dataset file")
    header = tuple(lines[0].split("\t"))
    if header != HEADER:
        raise PatientDataError(
            f"{path}:1: unknown column layout {header!r}, expected {HEADER!r}"
        )

    dataset = PatientDataset()
    by_id: dict[str, PatientRecord] = {}
    current_id: str | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise PatientDataError(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
        pid, kind, name, value = cols
        if kind not in KINDS:
            raise PatientDataError(f"{path}:{lineno}: unknown kind {kind!r}")
        if pid != current_id:
            if pid in by_id:
                raise PatientDataError(f"{path}:{lineno}: duplicate patient id {pid!r}")
            record = PatientRecord(id=pid)
            by_id[pid] = record
            dataset.records.append(record)
            current_id = pid
        record = by_id[pid]
        if kind == "observed":
            try:
                weeks = float(value)
            except ValueError:
                raise PatientDataError(f"{path}:{lineno}: bad duration {value!r}") from None
            record.observed.append(Observation(name, weeks))
        elif kind == "history":
            try:
                count = int(value)
            except ValueError:
                raise PatientDataError(f"{path}:{lineno}: bad count {value!r}") from None
            record.history.append(HistoryEntry(name, count))
        elif kind == "expected_disorder":
            dataset.expected_disorder[pid] = None if name == NO_LABEL else name
        else:  # expected_episode
            current = set(dataset.expected_episodes.get(pid, frozenset()))
            if name != NO_LABEL:
                current.add(name)
            dataset.expected_episodes[pid] = frozenset(current)
    return dataset


def save_patient_table(dataset: PatientDataset, path: str | Path) -> None:
    lines = ["\t".join(HEADER)]
    for record in dataset.records:
        for obs in record.observed:
            lines.append(f"{record.id}\tobserved\t{obs.symptom}\t{obs.weeks}")
        for entry in record.history:
            lines.append(f"{record.id}\thistory\t{entry.condition}\t{entry.count}")
        if record.id in dataset.expected_disorder:
            label = dataset.expected_disorder[record.id] or NO_LABEL
            lines.append(f"{record.id}\texpected_disorder\t{label}\t")
        if record.id in dataset.expected_episodes:
            episodes = dataset.expected_episodes[record.id]
            if not episodes:
                lines.append(f"{record.id}\texpected_episode\t{NO_LABEL}\t")
            for name in sorted(episodes):
                lines.append(f"{record.id}\texpected_episode\t{name}\t")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Validation and fact conversion
# ---------------------------------------------------------------------------

def validate_record(record: PatientRecord) -> list[Diagnostic]:
    issues: list[Diagnostic] = []
    seen_symptoms: set[str] = set()
    for obs in record.observed:
        if not math.isfinite(obs.weeks) or obs.weeks < 0:
            issues.append(Diagnostic("error", "R1", f"{record.id}: duration {obs.weeks} for {obs.symptom} must be finite and non-negative"))
        if obs.symptom in seen_symptoms:
            issues.append(Diagnostic("error", "R2", f"{record.id}: duplicate symptom {obs.symptom}"))
        seen_symptoms.add(obs.symptom)
        if not vocabulary.is_known_symptom(obs.symptom):
            issues.append(Diagnostic("warning", "R3", f"{record.id}: unknown symptom {obs.symptom}"))
    seen_conditions: set[str] = set()
    for entry in record.history:
        if entry.count < 0:
            issues.append(Diagnostic("error", "R4", f"{record.id}: history count {entry.count} for {entry.condition} must be non-negative"))
        if entry.condition in seen_conditions:
            issues.append(Diagnostic("error", "R2", f"{record.id}: duplicate history condition {entry.condition}"))
        seen_conditions.add(entry.condition)
        if not vocabulary.is_known_condition(entry.condition):
            issues.append(Diagnostic("warning", "R3", f"{record.id}: unknown history condition {entry.condition}"))
    return issues


def to_fact_store(data: PatientRecord | PatientDataset) -> FactStore:
    """Observed and History relations for one record or a whole dataset."""
    records = data.records if isinstance(data, PatientDataset) else [data]
    store = FactStore()
    store.ensure_relation("Observed")
    store.ensure_relation("History")
    for record in records:
        for obs in record.observed:
            store.add("Observed", (record.id, obs.symptom, float(obs.weeks)))
        for entry in record.history:
            store.add("History", (record.id, entry.condition, int(entry.count)))
    return store


# ---------------------------------------------------------------------------
# Engine fact files (.facts in, .csv out)
# ---------------------------------------------------------------------------

def _coerce(text: str, expected: str, where: str) -> Value:
    try:
        if expected == "symbol":
            return text
        if expected == "number":
            return int(text)
        return float(text)
    except ValueError:
        raise PatientDataError(f"{where}: cannot read {text!r} as {expected}") from None


def load_facts_dir(path: str | Path, program: Program) -> FactStore:
    """Read ``<Relation>.facts`` TSV files, typed per the program declarations.

    Missing declared inputs load as empty relations; files for undeclared
    relations are an error. Duplicate rows collapse silently (set semantics).
    """
    path = Path(path)
    store = FactStore()
    for relation in program.inputs:
        store.ensure_relation(relation)
    for facts_file in sorted(path.glob("*.facts")):
        relation = facts_file.stem
        decl = program.declarations.get(relation)
        if decl is None:
            raise PatientDataError(f"{facts_file}: relation {relation} is not declared")
        store.ensure_relation(relation)
        text = facts_file.read_text(encoding="utf-8")
        for lineno, line in enumerate(text.split("\n"), start=1):
            if line == "":
                continue
            cols = line.split("\t")
            if len(cols) != decl.arity:
                raise PatientDataError(
                    f"{facts_file}:{lineno}: expected {decl.arity} column(s), got {len(cols)}"
                )
            tup = tuple(
                _coerce(col, expected, f"{facts_file}:{lineno}")
                for col, expected in zip(cols, decl.types)
            )
            store.add(relation, tup)
    return store


def format_output_value(value: Value) -> str:
    return str(value)


def write_outputs(store: FactStore, program: Program, out_dir: str | Path) -> dict[str, int]:
    """One sorted ``<Relation>.csv`` (TSV content) per output relation."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts: dict[str, int] = {}
    for relation in program.outputs:
        rows = sorted(
            "\t".join(format_output_value(v) for v in tup)
            for tup in store.tuples(relation)
        )
        (out_dir / f"{relation}.csv").write_text(
            "".join(row + "\n" for row in rows), encoding="utf-8"
        )
        counts[relation] = len(rows)
    return counts
