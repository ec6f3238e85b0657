"""Prompt rendering and model clients for rule translation.

Model output is never executed or trusted: candidate programs flow into the
validator before anything else touches them. The replay client makes the
whole pipeline testable offline from a recorded transcript; the live client
reads its endpoint and key from MODEL_ENDPOINT / MODEL_KEY.

Transcript files are flat text, one ``=== request ===`` block (role-tagged
sections) followed by one ``=== response ===`` block per exchange, in order.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from . import vocabulary

Message = tuple[str, str]  # (role, content)


class LlmError(Exception):
    pass


class TransportError(LlmError):
    pass


class EmptyReplyError(LlmError):
    pass


class ReplayMismatch(LlmError):
    pass


@dataclass(frozen=True)
class PromptBundle:
    system: str
    example: str
    task: str
    messages: tuple[Message, ...]


_SYSTEM_TEMPLATE = """You are an expert at translating mental health diagnostic criteria into Soufflé Datalog code.
Translate the given criterion into a .dl program using Soufflé syntax as follows.
The patient information is given as input to the program as Observed and History relations.
The patient diagnosis is returned as output from the program as Diagnosis relation.
- .decl Observed(Patient:symbol, Symptom:symbol, Week:float) describes that Patient has experienced Symptom for Week number of weeks.
- .decl History(Patient:symbol, Condition:symbol, Count:number) describes that Patient has experienced Condition for Count number of times.
- .decl Diagnosis(Patient:symbol, Disorder:symbol) describes that Patient has been diagnosed with Disorder."""

_EXAMPLE_TEMPLATE = """For context, here is an example of a criterion translated into Soufflé .dl code.
- Criterion: {criteria}
- Soufflé .dl code:
{program}"""

_TASK_TEMPLATE = """Now, translate the following criteria into Souffle .dl code for {disorders}.
- Criteria: {criteria}
- Relevant symptom names for Observed relation: {symptoms}
- Relevant condition names for History relation: {conditions}"""

NO_CLEAR_DIAGNOSIS_INSTRUCTION = "Patients with no clear diagnosis should be indicated as such."

_DIAGNOSIS_SYSTEM_TEMPLATE = """You are an expert at diagnosing patients according to the ICD-11 Clinical Descriptions and Diagnostic Requirements (CDDR).
The patient data are represented by a list of current symptoms denoted as Observed and a list of history denoted as History.
Observed matches the patient with the symptom and the number of weeks it has been observed.
History matches the patient with the condition and the number of times it existed.
No record for a patient means that there is no related data for them.
The considered disorders are: {disorders}."""

# Default one-shot example: a compact worked translation in the same shape
# the task expects (episode threshold over Observed plus a History gate).
DEFAULT_EXAMPLE_CRITERIA = (
    "Disorder X requires at least two of the symptoms symptom_a, symptom_b or "
    "symptom_c, each present for at least two weeks, and at least one prior "
    "episode of condition_x."
)
DEFAULT_EXAMPLE_PROGRAM = """.decl Observed(Patient:symbol, Symptom:symbol, Week:float)
.decl History(Patient:symbol, Condition:symbol, Count:number)
.decl Diagnosis(Patient:symbol, Disorder:symbol)
.decl Qualifying(Patient:symbol, Symptom:symbol)
.decl QualifyingCount(Patient:symbol, Count:number)
.input Observed
.input History
.output Diagnosis
Qualifying(P, S) :- Observed(P, S, W), (S = "symptom_a"; S = "symptom_b"; S = "symptom_c"), W >= 2.
QualifyingCount(P, count : Qualifying(P, _)) :- Qualifying(P, _).
Diagnosis(P, "Disorder_X") :- QualifyingCount(P, N), N >= 2, History(P, "condition_x", H), H >= 1.
"""


def _display_disorders() -> str:
    names = [vocabulary.DISORDER_DISPLAY[d] for d in vocabulary.DISORDERS]
    return ", ".join(names[:-1]) + ", and " + names[-1]


def render_translation_prompt(criteria: str, example: tuple[str, str]) -> PromptBundle:
    """One-shot translation prompt: system contract, worked example, task."""
    if not criteria.strip():
        raise ValueError("criteria text is empty")
    example_criteria, example_program = example
    if not example_program.strip():
        raise ValueError("the one-shot template requires a non-empty example program")
    system = _SYSTEM_TEMPLATE
    example_text = _EXAMPLE_TEMPLATE.format(
        criteria=example_criteria.strip(), program=example_program.strip()
    )
    task = _TASK_TEMPLATE.format(
        disorders=_display_disorders(),
        criteria=criteria.strip(),
        symptoms=", ".join(vocabulary.DEPRESSIVE_POLE + vocabulary.MANIC_POLE),
        conditions=", ".join(vocabulary.HISTORY_CONDITIONS),
    )
    messages = (
        ("system", system + "\n\n" + example_text),
        ("user", task),
    )
    return PromptBundle(system=system, example=example_text, task=task, messages=messages)


def render_diagnosis_prompt(dataset) -> PromptBundle:
    """Direct-diagnosis prompt embedding every patient's facts."""
    if not dataset.records:
        raise ValueError("dataset is empty")
    system = _DIAGNOSIS_SYSTEM_TEMPLATE.format(disorders=_display_disorders())
    blocks = []
    for record in dataset.records:
        observed = "; ".join(f"{o.symptom} {o.weeks}" for o in record.observed) or "-"
        history = "; ".join(f"{h.condition} {h.count}" for h in record.history) or "-"
        blocks.append(f"Patient {record.id}:\n- Observed: {observed}\n- History: {history}")
    task = (
        "For brevity, please output only the diagnosis for the following patients.\n"
        + NO_CLEAR_DIAGNOSIS_INSTRUCTION
        + "\n\n"
        + "\n\n".join(blocks)
    )
    messages = (("system", system), ("user", task))
    return PromptBundle(system=system, example="", task=task, messages=messages)


# ---------------------------------------------------------------------------
# Clients
# ---------------------------------------------------------------------------

class ModelClient(Protocol):
    def complete(self, messages: Sequence[Message]) -> str: ...


def render_messages(messages: Sequence[Message]) -> str:
    """Canonical transcript form of a message sequence."""
    parts = []
    for role, content in messages:
        parts.append(f"--- {role} ---")
        parts.append(content.rstrip())
    return "\n".join(parts).rstrip()


class LiveClient:
    """Chat-completions client; endpoint and key come from the environment.

    Decoding parameters (temperature and friends) pass through untouched.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = 120.0,
        **decode_params,
    ):
        self.endpoint = endpoint or os.environ.get("MODEL_ENDPOINT", "")
        self.api_key = api_key if api_key is not None else os.environ.get("MODEL_KEY", "")
        self.model = model
        self.timeout = timeout
        self.decode_params = decode_params
        if not self.endpoint:
            raise TransportError("no model endpoint configured (set MODEL_ENDPOINT)")

    def complete(self, messages: Sequence[Message]) -> str:
        import httpx

        payload: dict = {
            "messages": [{"role": role, "content": content} for role, content in messages],
        }
        if self.model:
            payload["model"] = self.model
        payload.update(self.decode_params)
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            response.raise_for_status()
            body = response.json()
            return body["choices"][0]["message"]["content"]
        except httpx.HTTPError as exc:
            raise TransportError(f"model request failed: {exc}") from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"unexpected model response shape: {exc}") from exc


class ReplayClient:
    """Plays back a recorded transcript, strictly in order.

    Each request must match the recorded one byte for byte (canonical form);
    a mismatch or an exhausted transcript raises ReplayMismatch.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.exchanges = _parse_transcript(self.path.read_text(encoding="utf-8"))
        self._cursor = 0

    def complete(self, messages: Sequence[Message]) -> str:
        if self._cursor >= len(self.exchanges):
            raise ReplayMismatch(f"{self.path}: transcript exhausted after {self._cursor} exchange(s)")
        recorded_request, response = self.exchanges[self._cursor]
        actual = render_messages(messages)
        if actual != recorded_request:
            raise ReplayMismatch(
                f"{self.path}: request {self._cursor + 1} does not match the transcript"
            )
        self._cursor += 1
        return response


class RecordingClient:
    """Wraps a live client and appends each exchange to a transcript file."""

    def __init__(self, inner: ModelClient, path: str | Path):
        self.inner = inner
        self.path = Path(path)

    def complete(self, messages: Sequence[Message]) -> str:
        response = self.inner.complete(messages)
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write("=== request ===\n")
            fh.write(render_messages(messages) + "\n")
            fh.write("=== response ===\n")
            fh.write(response.rstrip() + "\n")
        return response


def _parse_transcript(text: str) -> list[tuple[str, str]]:
    exchanges: list[tuple[str, str]] = []
    request: list[str] | None = None
    response: list[str] | None = None
    for line in text.split("\n"):
        if line.strip() == "=== request ===":
            if request is not None and response is not None:
                exchanges.append(("\n".join(request).rstrip(), "\n".join(response).rstrip()))
            request, response = [], None
            continue
        if line.strip() == "=== response ===":
            response = []
            continue
        if response is not None:
            response.append(line)
        elif request is not None:
            request.append(line)
    if request is not None and response is not None:
        exchanges.append(("\n".join(request).rstrip(), "\n".join(response).rstrip()))
    return exchanges


_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def request_translation(bundle: PromptBundle, client: ModelClient) -> str:
    """Ask the model for a candidate program; return the raw program text.

    The first fenced code block is extracted when present, otherwise the
    whole reply is returned. No validation happens here.
    """
    reply = client.complete(bundle.messages)
    if not reply or not reply.strip():
        raise EmptyReplyError("model returned an empty reply")
    match = _FENCE.search(reply)
    if match:
        return match.group(1).strip() + "\n"
    return reply.strip() + "\n"
