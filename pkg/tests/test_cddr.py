from __future__ import annotations

import random

import pytest

from moodlogic import vocabulary
from moodlogic.cddr import (
    DiagnosisResult,
    EpisodeSet,
    RecordInvalid,
    analyzed_plan,
    benchmark,
    bundled_program,
    classify_episodes,
    diagnose,
    diagnose_all,
    episode_benchmark,
    load_bundled_dataset,
)
from moodlogic.datalog import parse
from moodlogic.datalog.lang import SymbolConst
from moodlogic.patients import HistoryEntry, Observation, PatientDataset, PatientRecord
from moodlogic.validator import lint


def test_bundled_program_lints_clean():
    assert lint(bundled_program()) == []


def test_bundled_program_declares_schema():
    program = parse(bundled_program())
    observed = program.declarations["Observed"]
    assert observed.params == (("Patient", "symbol"), ("Symptom", "symbol"), ("Week", "float"))
    history = program.declarations["History"]
    assert history.params == (("Patient", "symbol"), ("Condition", "symbol"), ("Count", "number"))
    diagnosis = program.declarations["Diagnosis"]
    assert diagnosis.params == (("Patient", "symbol"), ("Disorder", "symbol"))
    assert program.inputs == ["Observed", "History"]
    assert program.outputs == ["Diagnosis"]


def test_bundled_vocabulary_matches_module():
    program = parse(bundled_program())
    by_relation: dict[str, set[str]] = {}
    for fact in program.ground_facts:
        (arg,) = fact.args
        assert isinstance(arg, SymbolConst)
        by_relation.setdefault(fact.relation, set()).add(arg.text)
    assert by_relation["DepressivePole"] == set(vocabulary.DEPRESSIVE_POLE)
    assert by_relation["ManicPole"] == set(vocabulary.MANIC_POLE)
    assert by_relation["AffectiveClusterSymptom"] == set(vocabulary.AFFECTIVE_CLUSTER)
    assert by_relation["ManicCoreSymptom"] == set(vocabulary.MANIC_CORE)


def test_stratification_orders_episodes():
    plan = analyzed_plan()
    assert plan.level_of["DepressiveEpisode"] > plan.level_of["MixedEpisode"]


def test_classify_episodes_examples():
    dataset = load_bundled_dataset()
    assert classify_episodes(dataset.record("No. 5")) == EpisodeSet(mixed=True)
    assert classify_episodes(dataset.record("No. 3")) == EpisodeSet(depressive=True, hypomanic=True)
    assert classify_episodes(dataset.record("No. 24")) == EpisodeSet()
    assert classify_episodes(dataset.record("No. 12")) == EpisodeSet(manic=True)


def test_diagnose_examples():
    dataset = load_bundled_dataset()
    assert diagnose(dataset.record("No. 1")).disorders == {"Bipolar_II"}
    assert diagnose(dataset.record("No. 10")).disorders == frozenset()
    assert diagnose(dataset.record("No. 29")).disorders == {"Recurrent_Depressive_Disorder"}


def test_diagnose_unknown_symptom_warns_but_proceeds():
    record = PatientRecord(
        "P",
        [Observation("unknown_thing", 3.0)],
        [HistoryEntry("manic", 1)],
    )
    outcome = diagnose(record)
    assert outcome.disorders == {"Bipolar_I"}
    assert any(d.code == "R3" for d in outcome.issues)


def test_diagnose_invalid_record_raises():
    record = PatientRecord("P", [Observation("depressed_mood", -3.0)], [])
    with pytest.raises(RecordInvalid):
        diagnose(record)


def test_diagnose_all_counts():
    dataset = load_bundled_dataset()
    outcomes = diagnose_all(dataset)
    assert [o.patient_id for o in outcomes] == dataset.ids()
    tally: dict[str, int] = {}
    none_count = 0
    for outcome in outcomes:
        if not outcome.disorders:
            none_count += 1
        else:
            (disorder,) = outcome.disorders
            tally[disorder] = tally.get(disorder, 0) + 1
    assert tally == {
        "Bipolar_I": 9,
        "Bipolar_II": 8,
        "Single_Episode_Depressive_Disorder": 5,
        "Recurrent_Depressive_Disorder": 4,
    }
    assert none_count == 4


def test_diagnose_all_empty_dataset():
    assert diagnose_all(PatientDataset()) == []


def test_diagnose_all_pair_of_patients():
    dataset = load_bundled_dataset()
    pair = PatientDataset(records=[dataset.record("No. 8"), dataset.record("No. 28")])
    outcomes = diagnose_all(pair)
    assert [o.disorders for o in outcomes] == [
        frozenset({"Single_Episode_Depressive_Disorder"}),
        frozenset({"Single_Episode_Depressive_Disorder"}),
    ]


def test_diagnose_all_reports_invalid_and_continues():
    dataset = load_bundled_dataset()
    broken = PatientRecord("Broken", [Observation("depressed_mood", -1.0)], [])
    mixed = PatientDataset(records=[broken, dataset.record("No. 8")])
    outcomes = diagnose_all(mixed)
    assert outcomes[0].failed and outcomes[0].disorders == frozenset()
    assert outcomes[1].disorders == {"Single_Episode_Depressive_Disorder"}


def test_batch_equals_individual():
    dataset = load_bundled_dataset()
    batch = {o.patient_id: o.disorders for o in diagnose_all(dataset)}
    for record in dataset.records:
        assert diagnose(record).disorders == batch[record.id]


def test_benchmark_golden_30():
    report = benchmark(load_bundled_dataset())
    assert report.perfect and report.totals_label() == "30/30"


def test_benchmark_equals_direct_scoring():
    from moodlogic.validator import score_candidate

    dataset = load_bundled_dataset()
    assert benchmark(dataset).rows == score_candidate(bundled_program(), dataset).rows


def test_benchmark_flipped_label():
    dataset = load_bundled_dataset()
    flipped = dict(dataset.expected_disorder)
    flipped["No. 8"] = "Bipolar_I"
    report = benchmark(dataset, expected=flipped)
    assert report.correct == 29
    row = next(r for r in report.rows if r.patient == "No. 8")
    assert row.verdict == "wrong"


def test_benchmark_missing_label_names_patient():
    dataset = load_bundled_dataset()
    expected = {k: v for k, v in dataset.expected_disorder.items() if k != "No. 9"}
    with pytest.raises(ValueError, match="No. 9"):
        benchmark(dataset, expected=expected)


def test_episode_benchmark_golden_30():
    report = episode_benchmark(load_bundled_dataset())
    assert report.perfect and report.totals_label() == "30/30"


# ---------------------------------------------------------------------------
# Rule-set properties
# ---------------------------------------------------------------------------

def _random_record(rng: random.Random, pid: str) -> PatientRecord:
    symptoms = rng.sample(
        vocabulary.DEPRESSIVE_POLE + vocabulary.MANIC_POLE + vocabulary.NON_MOOD_SYMPTOMS,
        k=rng.randint(0, 12),
    )
    durations = (0.0, 0.2, 0.4, 0.5, 0.9, 1.0, 1.5, 2.0, 3.5, 6.0)
    observed = [Observation(s, rng.choice(durations)) for s in symptoms]
    history = [
        HistoryEntry(c, rng.randint(0, 3))
        for c in vocabulary.HISTORY_CONDITIONS
        if rng.random() < 0.4
    ]
    return PatientRecord(pid, observed, history)


def _thousand_records() -> PatientDataset:
    rng = random.Random(4242)
    return PatientDataset(records=[_random_record(rng, f"R{i}") for i in range(1000)])


def test_mutual_exclusivity_on_shipped_and_random_records():
    for outcome in diagnose_all(load_bundled_dataset()):
        assert len(outcome.disorders) <= 1
    for outcome in diagnose_all(_thousand_records()):
        assert len(outcome.disorders) <= 1, outcome


def test_bipolar_one_suppresses_everything_else():
    dataset = load_bundled_dataset()
    for pid in ("No. 3", "No. 5", "No. 7", "No. 13", "No. 14", "No. 17", "No. 21", "No. 22"):
        assert diagnose(dataset.record(pid)).disorders == {"Bipolar_I"}, pid
    randoms = _thousand_records()
    for record, outcome in zip(randoms.records, diagnose_all(randoms)):
        history = {h.condition: h.count for h in record.history}
        ever_manic = outcome.episodes.manic or history.get("manic", 0) >= 1
        ever_mixed = outcome.episodes.mixed or history.get("mixed", 0) >= 1
        if ever_manic or ever_mixed:
            assert outcome.disorders == {"Bipolar_I"}, record
        else:
            assert "Bipolar_I" not in outcome.disorders, record


def test_history_sufficiency():
    manic_only = PatientRecord("H1", [], [HistoryEntry("manic", 1)])
    assert diagnose(manic_only).disorders == {"Bipolar_I"}
    depressive_once = PatientRecord("H2", [], [HistoryEntry("depressive", 1)])
    assert diagnose(depressive_once).disorders == {"Single_Episode_Depressive_Disorder"}


def test_current_episode_sufficiency_no_history():
    dataset = load_bundled_dataset()
    five = dataset.record("No. 5")
    assert five.history == []
    outcome = diagnose(five)
    assert outcome.disorders == {"Bipolar_I"} and outcome.episodes.mixed


def test_non_mood_symptoms_never_count():
    dataset = load_bundled_dataset()
    outcome = diagnose(dataset.record("No. 20"))
    assert outcome.episodes == EpisodeSet()
    assert outcome.disorders == {"Single_Episode_Depressive_Disorder"}


def test_two_week_threshold_inclusive():
    symptoms = [
        "depressed_mood",
        "diminished_interest_pleasure",
        "reduced_concentration",
        "low_self_worth",
        "psychomotor_disturbances",
    ]
    record = PatientRecord("T", [Observation(s, 2.0) for s in symptoms], [])
    outcome = diagnose(record)
    assert outcome.episodes.depressive
    assert outcome.disorders == {"Single_Episode_Depressive_Disorder"}
    just_under = PatientRecord("U", [Observation(s, 1.9) for s in symptoms], [])
    assert diagnose(just_under).episodes == EpisodeSet()


def test_diagnosis_result_labels():
    result = DiagnosisResult("X", frozenset({"Bipolar_I"}))
    assert result.disorder_label() == "Bipolar_I"
    assert DiagnosisResult("Y").disorder_label() == "-"
