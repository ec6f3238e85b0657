#!/usr/bin/env python3
"""Compare the compiled join kernel against the pure-Python fallback.

Two workloads:
  * transitive closure over a random sparse graph (join-heavy recursion)
  * the bundled mood-disorder program over synthetic patients (aggregate
    and negation heavy, wide strata)

Usage: python benchmarks/bench_engine.py [--nodes 260] [--patients 2000]
"""

from __future__ import annotations

import argparse
import random
import time

from moodlogic.datalog import FactStore, evaluate, expand_disjunctions, parse, stratify
from moodlogic.datalog.kernels import get_kernel
from moodlogic.datalog import kernels
from moodlogic.cddr import bundled_program
from moodlogic.patients import PatientDataset, PatientRecord, Observation, HistoryEntry, to_fact_store
from moodlogic import vocabulary

EDGE_PATH = """
.decl Edge(x:number, y:number)
.decl Path(x:number, y:number)
.input Edge
.output Path
Path(x, y) :- Edge(x, y).
Path(x, y) :- Path(x, z), Edge(z, y).
"""


def closure_workload(nodes: int):
    rng = random.Random(7)
    edges = [(i, i + 1) for i in range(nodes - 1)]
    edges += [(rng.randrange(nodes), rng.randrange(nodes)) for _ in range(nodes // 4)]
    plan = stratify(expand_disjunctions(parse(EDGE_PATH)))
    store = FactStore.from_dict({"Edge": edges})
    return plan, store


def patients_workload(n_patients: int):
    rng = random.Random(11)
    all_symptoms = vocabulary.DEPRESSIVE_POLE + vocabulary.MANIC_POLE
    records = []
    for i in range(n_patients):
        symptoms = rng.sample(all_symptoms, k=rng.randint(1, 10))
        observed = [Observation(s, rng.choice((0.5, 1.0, 1.5, 2.0, 3.5, 6.0))) for s in symptoms]
        history = [
            HistoryEntry(c, rng.randint(1, 3))
            for c in vocabulary.HISTORY_CONDITIONS
            if rng.random() < 0.3
        ]
        records.append(PatientRecord(f"P{i}", observed, history))
    plan = stratify(expand_disjunctions(parse(bundled_program())))
    store = to_fact_store(PatientDataset(records=records))
    return plan, store


def run(plan, store, kernel) -> tuple[float, int]:
    kernels.enumerate_bindings = kernel.enumerate_bindings
    kernels.match_pattern = kernel.match_pattern
    kernels.count_matches = kernel.count_matches
    start = time.perf_counter()
    result = evaluate(plan, store)
    return time.perf_counter() - start, result.total()


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--nodes", type=int, default=260)
    parser.add_argument("--patients", type=int, default=2000)
    args = parser.parse_args()

    backends = [("python", get_kernel("python"))]
    try:
        backends.append(("c", get_kernel("c")))
    except ImportError:
        print("compiled kernel not built; benchmarking pure Python only")

    workloads = [
        (f"transitive closure ({args.nodes} nodes)", closure_workload(args.nodes)),
        (f"mood rules ({args.patients} patients)", patients_workload(args.patients)),
    ]
    print(f"{'workload':<38} {'kernel':<8} {'seconds':>9} {'facts':>9}")
    for label, (plan, store) in workloads:
        timings = {}
        for name, kernel in backends:
            seconds, facts = run(plan, store, kernel)
            timings[name] = seconds
            print(f"{label:<38} {name:<8} {seconds:>9.3f} {facts:>9}")
        if "c" in timings:
            print(f"{label:<38} speedup  {timings['python'] / timings['c']:>8.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
