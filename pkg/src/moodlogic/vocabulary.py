"""Symptom and condition vocabularies shared by the rules, loaders and UI.

Names are the canonical snake_case spellings used throughout the patient
dataset. The bundled rule program embeds the same names as ground facts; a
test keeps the two in sync.
"""

from __future__ import annotations

DEPRESSIVE_POLE: tuple[str, ...] = (
    "depressed_mood",
    "diminished_interest_pleasure",
    "reduced_concentration",
    "low_self_worth",
    "hopelessness",
    "recurrent_thoughts_death_suicide",
    "disrupted_excessive_sleep",
    "change_in_appetite_weight",
    "psychomotor_disturbances",
    "reduced_energy",
)

MANIC_POLE: tuple[str, ...] = (
    "euphoria_irritability_expansiveness",
    "increased_activity_energy",
    "increased_talkativeness",
    "racing_thoughts",
    "increased_self_esteem",
    "decreased_need_for_sleep",
    "distractibility",
    "impulsive_reckless_behavior",
    "increased_sexual_sociability_goal_directed_activity",
)

# The two symptoms of which a depressive episode needs at least one.
AFFECTIVE_CLUSTER: tuple[str, ...] = (
    "depressed_mood",
    "diminished_interest_pleasure",
)

# The pair a manic or hypomanic episode requires in full.
MANIC_CORE: tuple[str, ...] = (
    "euphoria_irritability_expansiveness",
    "increased_activity_energy",
)

# Recognized symptoms that belong to neither mood pole.
NON_MOOD_SYMPTOMS: tuple[str, ...] = (
    "delusions",
    "passivity_experiences",
    "disorganized_behavior",
)

HISTORY_CONDITIONS: tuple[str, ...] = ("depressive", "manic", "mixed", "hypomanic")

EPISODE_NAMES: tuple[str, ...] = ("depressive", "manic", "mixed", "hypomanic")

BIPOLAR_I = "Bipolar_I"
BIPOLAR_II = "Bipolar_II"
SINGLE_EPISODE_DEPRESSIVE = "Single_Episode_Depressive_Disorder"
RECURRENT_DEPRESSIVE = "Recurrent_Depressive_Disorder"

DISORDERS: tuple[str, ...] = (
    BIPOLAR_I,
    BIPOLAR_II,
    SINGLE_EPISODE_DEPRESSIVE,
    RECURRENT_DEPRESSIVE,
)

DISORDER_DISPLAY: dict[str, str] = {
    BIPOLAR_I: "Bipolar I",
    BIPOLAR_II: "Bipolar II",
    SINGLE_EPISODE_DEPRESSIVE: "Single Episode Depressive Disorder",
    RECURRENT_DEPRESSIVE: "Recurrent Depressive Disorder",
}

KNOWN_SYMPTOMS: frozenset[str] = frozenset(DEPRESSIVE_POLE + MANIC_POLE + NON_MOOD_SYMPTOMS)


def is_known_symptom(name: str) -> bool:
    return name in KNOWN_SYMPTOMS


def is_known_condition(name: str) -> bool:
    return name in HISTORY_CONDITIONS


def vocabulary_document() -> dict:
    """Vocabulary metadata served to clients so names are never re-typed."""
    return {
        "depressive_pole": list(DEPRESSIVE_POLE),
        "manic_pole": list(MANIC_POLE),
        "affective_cluster": list(AFFECTIVE_CLUSTER),
        "manic_core": list(MANIC_CORE),
        "non_mood": list(NON_MOOD_SYMPTOMS),
        "history_conditions": list(HISTORY_CONDITIONS),
        "disorders": [
            {"symbol": symbol, "display": DISORDER_DISPLAY[symbol]} for symbol in DISORDERS
        ],
    }
