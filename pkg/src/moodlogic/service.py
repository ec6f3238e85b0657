"""HTTP service: diagnosis, explanation and program metadata for the UI.

All state is immutable after startup (analyzed plan, program text, preloaded
dataset provenance) except a bounded, lock-protected explanation cache.
Each request evaluates on its own fact store.
"""

from __future__ import annotations

import hashlib
import json
import threading
from collections import OrderedDict

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .datalog.analysis import expand_disjunctions
from .datalog.lang import FactStore, ParseFailed
from .datalog.parser import parse, parse_ground_atom
from .datalog.stratify import stratify
from .cddr import (
    EPISODE_RELATIONS,
    bundled_program,
    load_bundled_dataset,
)
from .patients import HistoryEntry, Observation, PatientRecord, to_fact_store, validate_record
from .provenance import (
    NotDerived,
    evaluate_with_provenance,
    explain,
    tree_to_doc,
)
from .validator import Diagnostic, lint
from .vocabulary import DISORDERS, vocabulary_document

EXPLANATION_CACHE_SIZE = 256


class ServiceStartupError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics[:5]))
        self.diagnostics = diagnostics


class ObservationIn(BaseModel):
    symptom: str
    weeks: float


class HistoryIn(BaseModel):
    condition: str
    count: int


class DiagnoseRequest(BaseModel):
    id: str = "patient"
    observed: list[ObservationIn] = Field(default_factory=list)
    history: list[HistoryIn] = Field(default_factory=list)


class ExplainRequest(BaseModel):
    id: str | None = None
    fact: str | None = None


class _ExplanationCache:
    def __init__(self, capacity: int = EXPLANATION_CACHE_SIZE):
        self.capacity = capacity
        self._entries: OrderedDict[str, dict] = OrderedDict()
        self._lock = threading.Lock()

    def put(self, key: str, doc: dict) -> None:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                return
            self._entries[key] = doc
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)

    def get(self, key: str) -> dict | None:
        with self._lock:
            doc = self._entries.get(key)
            if doc is not None:
                self._entries.move_to_end(key)
            return doc


def _diagnostic_doc(diag: Diagnostic) -> dict:
    return {
        "severity": diag.severity,
        "code": diag.code,
        "message": diag.message,
        "line": diag.span.line if diag.span is not None else None,
    }


def create_app(
    program_text: str | None = None,
    preload_dataset: bool = True,
    cors: list[str] | None = None,
) -> FastAPI:
    """Build the service around one analyzed program.

    Raises ServiceStartupError when the program has lint errors, so a broken
    override never serves traffic.
    """
    source = program_text if program_text is not None else bundled_program()
    findings = lint(source)
    errors = [d for d in findings if d.severity == "error"]
    if errors:
        raise ServiceStartupError(errors)
    program = expand_disjunctions(parse(source))
    plan = stratify(program)
    program_hash = hashlib.sha256(source.encode("utf-8")).hexdigest()

    preloaded_index = None
    if preload_dataset:
        dataset = load_bundled_dataset()
        _, preloaded_index = evaluate_with_provenance(plan, to_fact_store(dataset))

    cache = _ExplanationCache()
    app = FastAPI(title="moodlogic", version="0.1.0")

    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def _record_from_request(req: DiagnoseRequest) -> PatientRecord:
        return PatientRecord(
            id=req.id,
            observed=[Observation(o.symptom, o.weeks) for o in req.observed],
            history=[HistoryEntry(h.condition, h.count) for h in req.history],
        )

    def _record_doc(record: PatientRecord) -> dict:
        return {
            "id": record.id,
            "observed": [{"symptom": o.symptom, "weeks": o.weeks} for o in record.observed],
            "history": [{"condition": h.condition, "count": h.count} for h in record.history],
        }

    def _explanation_id(record_doc: dict, disorder: str) -> str:
        blob = json.dumps([program_hash, record_doc, disorder], sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    @app.post("/diagnose")
    def diagnose_endpoint(req: DiagnoseRequest) -> dict:
        record = _record_from_request(req)
        issues = validate_record(record)
        if any(d.severity == "error" for d in issues):
            raise HTTPException(
                status_code=400,
                detail={"errors": [_diagnostic_doc(d) for d in issues if d.severity == "error"]},
            )
        input_store = FactStore()
        full = to_fact_store(record)
        for relation in ("Observed", "History"):
            if program.declared(relation):
                input_store.ensure_relation(relation)
                for tup in full.tuples(relation):
                    input_store.add(relation, tup)
        result, index = evaluate_with_provenance(plan, input_store)

        disorders = sorted(
            str(d)
            for p, d in (result.tuples("Diagnosis") if program.declared("Diagnosis") else [])
            if p == record.id
        )
        episodes = {
            name: result.contains(relation, (record.id,))
            for name, relation in EPISODE_RELATIONS.items()
        }
        record_doc = _record_doc(record)
        explanations: dict[str, str] = {}
        for disorder in disorders:
            tree = explain(("Diagnosis", (record.id, disorder)), index)
            key = _explanation_id(record_doc, disorder)
            cache.put(key, tree_to_doc(tree))
            explanations[disorder] = key
        return {
            "record": record_doc,
            "disorders": disorders,
            "episodes": episodes,
            "explanations": explanations,
            "warnings": [_diagnostic_doc(d) for d in issues],
        }

    @app.post("/explain")
    def explain_endpoint(req: ExplainRequest) -> dict:
        if req.id is not None:
            doc = cache.get(req.id)
            if doc is None:
                raise HTTPException(status_code=404, detail="unknown explanation id")
            return doc
        if req.fact is not None:
            if preloaded_index is None:
                raise HTTPException(status_code=404, detail="no dataset preloaded")
            try:
                atom = parse_ground_atom(req.fact)
            except ParseFailed as exc:
                raise HTTPException(status_code=400, detail=f"bad fact: {exc}") from exc
            try:
                tree = explain(atom, preloaded_index)
            except NotDerived as exc:
                raise HTTPException(status_code=404, detail=str(exc)) from exc
            return tree_to_doc(tree)
        raise HTTPException(status_code=400, detail="provide either an id or a fact")

    @app.get("/program")
    def program_endpoint() -> dict:
        return {
            "source": source,
            "lint": [_diagnostic_doc(d) for d in findings],
            "strata": plan.relations_by_level(),
            "vocabulary": vocabulary_document(),
            "disorders": list(DISORDERS),
            "program_hash": program_hash,
        }

    @app.get("/health")
    def health_endpoint() -> dict:
        return {"status": "ok", "program_hash": program_hash}

    return app
