"""Command-line interface.

Exit codes: 0 success, 1 domain failure (lint errors, mismatched benchmark,
engine errors), 2 usage or I/O problems. Diagnostics go to stderr; stdout
stays machine-readable.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .datalog.analysis import expand_disjunctions
from .datalog.lang import DatalogError, ParseFailed
from .datalog.parser import parse, parse_ground_atom
from .datalog.stratify import stratify
from . import cddr
from .cddr import RecordInvalid, bundled_dataset_path, bundled_program
from .llm import (
    DEFAULT_EXAMPLE_CRITERIA,
    DEFAULT_EXAMPLE_PROGRAM,
    LiveClient,
    LlmError,
    ReplayClient,
    render_translation_prompt,
    request_translation,
)
from .patients import (
    PatientDataError,
    load_facts_dir,
    load_patient_table,
    to_fact_store,
    write_outputs,
)
from .provenance import NotDerived, evaluate_with_provenance, explain, render_tree
from .validator import ScoreRefused, lint, score_candidate


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", 2) from exc


def _program_text(spec: str) -> str:
    return bundled_program() if spec == "default" else _read_text(spec)


def _load_dataset(spec: str):
    path = bundled_dataset_path() if spec == "default" else spec
    if not Path(path).exists():
        raise CliError(f"dataset not found: {path}", 2)
    try:
        return load_patient_table(path)
    except PatientDataError as exc:
        raise CliError(str(exc), 1) from exc


def _analyze_or_fail(source: str, what: str):
    findings = lint(source)
    errors = [d for d in findings if d.severity == "error"]
    for diag in findings:
        print(str(diag), file=sys.stderr)
    if errors:
        raise CliError(f"{what} has {len(errors)} lint error(s)", 1)
    return stratify(expand_disjunctions(parse(source)))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    source = _read_text(args.program)
    findings = lint(source)
    for diag in findings:
        print(str(diag), file=sys.stderr)
    errors = sum(1 for d in findings if d.severity == "error")
    print(f"{len(findings)} finding(s), {errors} error(s)", file=sys.stderr)
    return 0 if errors == 0 else 1


def cmd_run(args) -> int:
    source = _read_text(args.program)
    plan = _analyze_or_fail(source, args.program)
    facts_dir = Path(args.facts)
    if not facts_dir.is_dir():
        raise CliError(f"facts directory not found: {facts_dir}", 2)
    try:
        store = load_facts_dir(facts_dir, plan.program)
    except PatientDataError as exc:
        raise CliError(str(exc), 1) from exc
    from .datalog.engine import evaluate

    result = evaluate(plan, store)
    counts = write_outputs(result, plan.program, args.out)
    for relation, count in counts.items():
        print(f"{relation}\t{count}")
    return 0


def cmd_diagnose(args) -> int:
    if bool(args.patient) == bool(args.dataset):
        raise CliError("provide exactly one of --patient or --dataset", 2)
    dataset = _load_dataset(args.patient or args.dataset)
    if args.patient and len(dataset.records) != 1:
        raise CliError(f"--patient file must hold exactly one record, got {len(dataset.records)}", 2)
    plan = None if args.program == "default" else _analyze_or_fail(_program_text(args.program), args.program)

    failures = 0
    for record in dataset.records:
        try:
            if args.explain:
                outcome, index = cddr.diagnose(record, with_provenance=True, plan=plan)
            else:
                outcome = cddr.diagnose(record, plan=plan)
                index = None
        except RecordInvalid as exc:
            for diag in exc.diagnostics:
                print(str(diag), file=sys.stderr)
            failures += 1
            continue
        episodes = ",".join(sorted(outcome.episodes.names())) or "-"
        print(f"{record.id} → {outcome.disorder_label()} [episodes: {episodes}]")
        for diag in outcome.issues:
            print(str(diag), file=sys.stderr)
        if args.explain and index is not None:
            for disorder in sorted(outcome.disorders):
                tree = explain(("Diagnosis", (record.id, disorder)), index)
                print(render_tree(tree, "text"))
    if failures:
        raise CliError(f"{failures} record(s) failed validation", 1)
    return 0


def cmd_explain(args) -> int:
    source = _program_text(args.program)
    plan = _analyze_or_fail(source, args.program)
    if bool(args.facts) == bool(args.dataset):
        raise CliError("provide exactly one of --facts or --dataset", 2)
    if args.facts:
        facts_dir = Path(args.facts)
        if not facts_dir.is_dir():
            raise CliError(f"facts directory not found: {facts_dir}", 2)
        store = load_facts_dir(facts_dir, plan.program)
    else:
        store = to_fact_store(_load_dataset(args.dataset))
    _, index = evaluate_with_provenance(plan, store)
    try:
        atom = parse_ground_atom(args.fact)
    except ParseFailed as exc:
        raise CliError(f"bad fact {args.fact!r}: {exc}", 2) from exc
    try:
        tree = explain(atom, index)
    except NotDerived as exc:
        raise CliError(str(exc), 1) from exc
    print(render_tree(tree, "text"))
    return 0


def cmd_bench(args) -> int:
    dataset = _load_dataset(args.dataset)
    if args.episodes:
        if args.program != "default":
            raise CliError("--episodes only applies to the default program", 2)
        report = cddr.episode_benchmark(dataset)
    else:
        source = _program_text(args.program)
        try:
            report = score_candidate(source, dataset)
        except ScoreRefused as exc:
            for diag in exc.diagnostics:
                print(str(diag), file=sys.stderr)
            raise CliError("candidate program refused", 1) from exc
        except ValueError as exc:
            raise CliError(str(exc), 1) from exc
    sys.stdout.write(report.to_tsv())
    return 0 if report.perfect else 1


def cmd_translate(args) -> int:
    criteria = _read_text(args.criteria)
    example_criteria = _read_text(args.example_criteria) if args.example_criteria else DEFAULT_EXAMPLE_CRITERIA
    example_program = _read_text(args.example_program) if args.example_program else DEFAULT_EXAMPLE_PROGRAM
    bundle = render_translation_prompt(criteria, (example_criteria, example_program))
    if args.client == "replay":
        if not args.transcript:
            raise CliError("--client replay requires --transcript", 2)
        if not Path(args.transcript).exists():
            raise CliError(f"transcript not found: {args.transcript}", 2)
        client = ReplayClient(args.transcript)
    else:
        try:
            client = LiveClient(model=args.model)
        except LlmError as exc:
            raise CliError(str(exc), 2) from exc
    try:
        candidate = request_translation(bundle, client)
    except LlmError as exc:
        raise CliError(str(exc), 1) from exc
    sys.stdout.write(candidate)
    return 0


def cmd_serve(args) -> int:
    from .service import ServiceStartupError, create_app

    source = None if args.program == "default" else _read_text(args.program)
    try:
        app = create_app(
            program_text=source,
            preload_dataset=not args.no_preload,
            cors=args.cors,
        )
    except ServiceStartupError as exc:
        for diag in exc.diagnostics:
            print(str(diag), file=sys.stderr)
        raise CliError("program has lint errors; refusing to serve", 1) from exc
    import uvicorn

    uvicorn.run(app, host=args.bind, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moodlogic", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="lint a rule program")
    p.add_argument("program")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="evaluate a program over .facts files")
    p.add_argument("program")
    p.add_argument("--facts", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("diagnose", help="diagnose patients from a dataset file")
    p.add_argument("--patient")
    p.add_argument("--dataset")
    p.add_argument("--program", default="default")
    p.add_argument("--explain", action="store_true")
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("explain", help="explain one derived fact")
    p.add_argument("fact")
    p.add_argument("--program", default="default")
    p.add_argument("--facts")
    p.add_argument("--dataset")
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("bench", help="score a program against labeled patients")
    p.add_argument("--dataset", default="default")
    p.add_argument("--program", default="default")
    p.add_argument("--episodes", action="store_true")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("translate", help="render the translation prompt and query a model")
    p.add_argument("--criteria", required=True)
    p.add_argument("--example-criteria")
    p.add_argument("--example-program")
    p.add_argument("--client", choices=("replay", "live"), default="replay")
    p.add_argument("--transcript")
    p.add_argument("--model")
    p.set_defaults(fn=cmd_translate)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--program", default="default")
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--cors", action="append")
    p.add_argument("--no-preload", action="store_true")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except (DatalogError, PatientDataError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
