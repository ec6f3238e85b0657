from __future__ import annotations

import pytest

from moodlogic.llm import (
    DEFAULT_EXAMPLE_CRITERIA,
    DEFAULT_EXAMPLE_PROGRAM,
    EmptyReplyError,
    LiveClient,
    NO_CLEAR_DIAGNOSIS_INSTRUCTION,
    RecordingClient,
    ReplayClient,
    ReplayMismatch,
    TransportError,
    render_diagnosis_prompt,
    render_messages,
    render_translation_prompt,
    request_translation,
)
from moodlogic.cddr import load_bundled_dataset
from moodlogic.validator import lint

from conftest import FIXTURES, fixture_text


def _bundle():
    criteria = fixture_text("mood_criteria.txt")
    return render_translation_prompt(criteria, (DEFAULT_EXAMPLE_CRITERIA, DEFAULT_EXAMPLE_PROGRAM))


def test_translation_prompt_contains_relation_contract():
    bundle = _bundle()
    for decl in (
        ".decl Observed(Patient:symbol, Symptom:symbol, Week:float)",
        ".decl History(Patient:symbol, Condition:symbol, Count:number)",
        ".decl Diagnosis(Patient:symbol, Disorder:symbol)",
    ):
        assert decl in bundle.system
    assert bundle.messages[0][0] == "system"
    assert bundle.messages[1][0] == "user"


def test_translation_prompt_lists_four_disorders():
    bundle = _bundle()
    for name in ("Bipolar I", "Bipolar II", "Single Episode Depressive Disorder", "Recurrent Depressive Disorder"):
        assert name in bundle.task


def test_translation_prompt_has_exactly_one_example():
    bundle = _bundle()
    assert bundle.example.count("Criterion:") == 1
    assert DEFAULT_EXAMPLE_PROGRAM.strip() in bundle.example


def test_translation_prompt_requires_example():
    with pytest.raises(ValueError):
        render_translation_prompt("criteria text", ("something", "   "))
    with pytest.raises(ValueError):
        render_translation_prompt("", (DEFAULT_EXAMPLE_CRITERIA, DEFAULT_EXAMPLE_PROGRAM))


def test_translation_prompt_deterministic():
    assert _bundle() == _bundle()


def test_diagnosis_prompt_blocks():
    dataset = load_bundled_dataset()
    bundle = render_diagnosis_prompt(dataset)
    assert bundle.task.count("Patient No. ") == 30
    assert NO_CLEAR_DIAGNOSIS_INSTRUCTION in bundle.task
    from moodlogic.patients import PatientDataset

    single = PatientDataset(records=[dataset.record("No. 8")])
    assert render_diagnosis_prompt(single).task.count("Patient No. ") == 1


def test_replay_client_round_trip():
    client = ReplayClient(FIXTURES / "translate_transcript.txt")
    candidate = request_translation(_bundle(), client)
    assert candidate.strip() == fixture_text("broken_arity.dl").strip()


def test_replayed_candidate_lints_with_arity_error():
    client = ReplayClient(FIXTURES / "translate_transcript.txt")
    candidate = request_translation(_bundle(), client)
    codes = {d.code for d in lint(candidate)}
    assert "L2" in codes


def test_replay_mismatch_on_unexpected_request():
    client = ReplayClient(FIXTURES / "translate_transcript.txt")
    other = render_translation_prompt("different criteria", (DEFAULT_EXAMPLE_CRITERIA, DEFAULT_EXAMPLE_PROGRAM))
    with pytest.raises(ReplayMismatch):
        client.complete(other.messages)


def test_replay_exhaustion():
    client = ReplayClient(FIXTURES / "translate_transcript.txt")
    client.complete(_bundle().messages)
    with pytest.raises(ReplayMismatch, match="exhausted"):
        client.complete(_bundle().messages)


def test_recording_client_produces_replayable_transcript(tmp_path):
    class Canned:
        def complete(self, messages):
            return "plain answer, no fence"

    path = tmp_path / "t.txt"
    recorder = RecordingClient(Canned(), path)
    bundle = _bundle()
    assert recorder.complete(bundle.messages) == "plain answer, no fence"
    replay = ReplayClient(path)
    assert replay.complete(bundle.messages) == "plain answer, no fence"


def test_fence_stripping_variants():
    bundle = _bundle()

    class Fenced:
        def complete(self, messages):
            return "preamble\n```\n.decl A(x:number)\n```\npostamble"

    class Bare:
        def complete(self, messages):
            return "  .decl A(x:number)  "

    assert request_translation(bundle, Fenced()) == ".decl A(x:number)\n"
    assert request_translation(bundle, Bare()) == ".decl A(x:number)\n"


def test_empty_reply_is_error():
    bundle = _bundle()

    class Empty:
        def complete(self, messages):
            return "   \n"

    with pytest.raises(EmptyReplyError):
        request_translation(bundle, Empty())


def test_live_client_requires_endpoint(monkeypatch):
    monkeypatch.delenv("MODEL_ENDPOINT", raising=False)
    with pytest.raises(TransportError):
        LiveClient()


def test_live_client_payload_and_parse(monkeypatch):
    captured = {}

    class FakeResponse:
        def raise_for_status(self):
            pass

        def json(self):
            return {"choices": [{"message": {"content": "reply text"}}]}

    def fake_post(url, json=None, headers=None, timeout=None):
        captured.update(url=url, json=json, headers=headers)
        return FakeResponse()

    import httpx

    monkeypatch.setattr(httpx, "post", fake_post)
    client = LiveClient(endpoint="http://localhost:9/v1/chat", api_key="k", model="m", temperature=0.2)
    out = client.complete((("system", "s"), ("user", "u")))
    assert out == "reply text"
    assert captured["url"] == "http://localhost:9/v1/chat"
    assert captured["json"]["model"] == "m"
    assert captured["json"]["temperature"] == 0.2
    assert captured["json"]["messages"][0] == {"role": "system", "content": "s"}
    assert captured["headers"]["Authorization"] == "Bearer k"


def test_render_messages_canonical_form():
    text = render_messages((("system", "a\n"), ("user", "b")))
    assert text == "--- system ---\na\n--- user ---\nb"
