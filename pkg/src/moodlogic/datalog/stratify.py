"""Precedence graph, stratification and cycle detection.

Relations are assigned levels: a positive dependency keeps the level, a
negated or aggregated dependency strictly raises it. Levels are computed on
the condensation of the precedence graph, so positive recursion stays legal
while any cycle through negation or aggregation is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lang import (
    Constraint,
    DatalogError,
    Negated,
    Positive,
    Program,
    Rule,
    Span,
    term_aggregates,
)

POSITIVE = "positive"
NEGATED = "negated"
AGGREGATED = "aggregated"


@dataclass(frozen=True)
class Edge:
    source: str  # body relation
    target: str  # head relation
    kind: str  # POSITIVE | NEGATED | AGGREGATED
    rule: Rule = field(compare=False)


class CycleError(DatalogError):
    def __init__(self, relations: list[str], spans: list[Span]):
        names = " -> ".join(relations + relations[:1])
        super().__init__(f"negation/aggregation cycle: {names}")
        self.relations = relations
        self.spans = spans


@dataclass
class StratifiedPlan:
    program: Program  # expanded
    strata: list[list[Rule]]
    level_of: dict[str, int]
    edges: list[Edge]

    def relations_by_level(self) -> list[list[str]]:
        if not self.level_of:
            return []
        out: list[list[str]] = [[] for _ in range(max(self.level_of.values()) + 1)]
        for name in self.program.declarations:
            out[self.level_of.get(name, 0)].append(name)
        return out


def rule_edges(rule: Rule) -> list[Edge]:
    edges = []
    head = rule.head.relation
    for lit in rule.literals():
        if isinstance(lit, Positive):
            edges.append(Edge(lit.atom.relation, head, POSITIVE, rule))
        elif isinstance(lit, Negated):
            edges.append(Edge(lit.atom.relation, head, NEGATED, rule))
        elif isinstance(lit, Constraint):
            for side in (lit.lhs, lit.rhs):
                for agg in term_aggregates(side):
                    edges.append(Edge(agg.target.relation, head, AGGREGATED, rule))
    for arg in rule.head.args:
        for agg in term_aggregates(arg):
            edges.append(Edge(agg.target.relation, head, AGGREGATED, rule))
    return edges


def _tarjan_sccs(nodes: list[str], succ: dict[str, list[str]]) -> list[list[str]]:
    """Strongly connected components, iteratively, in reverse topological order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0

    for root in nodes:
        if root in index:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, child_idx = work.pop()
            if child_idx == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            recurse = False
            children = succ.get(node, [])
            for i in range(child_idx, len(children)):
                child = children[i]
                if child not in index:
                    work.append((node, i + 1))
                    work.append((child, 0))
                    recurse = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if recurse:
                continue
            if work and low[node] < low[work[-1][0]]:
                low[work[-1][0]] = low[node]
            if low[node] == index[node]:
                scc = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    scc.append(member)
                    if member == node:
                        break
                sccs.append(scc)
    return sccs


def _find_cycle(edge: Edge, scc: set[str], succ: dict[str, list[str]]) -> list[str]:
    """A relation path target -> ... -> source inside the SCC (closing the edge)."""
    start, goal = edge.target, edge.source
    if start == goal:
        return [start]
    parents: dict[str, str] = {start: start}
    frontier = [start]
    while frontier:
        node = frontier.pop(0)
        for child in succ.get(node, []):
            if child not in scc or child in parents:
                continue
            parents[child] = node
            if child == goal:
                path = [child]
                while path[-1] != start:
                    path.append(parents[path[-1]])
                return list(reversed(path))
            frontier.append(child)
    return [start, goal]  # unreachable for a true SCC edge


def stratify(program: Program) -> StratifiedPlan:
    """Compute evaluation strata or raise CycleError.

    Strata are ordered lowest first. All defining rules of a relation land in
    the stratum of that relation's level, so negated and aggregated
    dependencies always point strictly downward.
    """
    edges: list[Edge] = []
    for rule in program.rules:
        edges.extend(rule_edges(rule))

    nodes = list(program.declarations)
    node_set = set(nodes)
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for e in edges:
        if e.source in node_set and e.target in node_set:
            succ[e.source].append(e.target)

    sccs = _tarjan_sccs(nodes, succ)  # reverse topological order
    scc_of: dict[str, int] = {}
    for i, scc in enumerate(sccs):
        for name in scc:
            scc_of[name] = i

    # Reject negated/aggregated edges inside an SCC.
    for e in edges:
        if e.kind == POSITIVE or e.source not in scc_of or e.target not in scc_of:
            continue
        if scc_of[e.source] == scc_of[e.target]:
            scc_members = set(sccs[scc_of[e.source]])
            cycle = _find_cycle(e, scc_members, succ)
            spans = sorted(
                {ed.rule.span for ed in edges if ed.source in scc_members and ed.target in scc_members},
                key=lambda s: (s.line, s.col),
            )
            raise CycleError(cycle, spans)

    # Levels over the condensation, processed in topological order.
    levels: dict[int, int] = {i: 0 for i in range(len(sccs))}
    for scc_idx in reversed(range(len(sccs))):  # topological order
        for e in edges:
            if e.source not in scc_of or e.target not in scc_of:
                continue
            if scc_of[e.target] != scc_idx or scc_of[e.source] == scc_idx:
                continue
            bump = 1 if e.kind in (NEGATED, AGGREGATED) else 0
            levels[scc_idx] = max(levels[scc_idx], levels[scc_of[e.source]] + bump)

    level_of = {name: levels[scc_of[name]] for name in nodes}
    n_levels = max(level_of.values(), default=0) + 1
    strata: list[list[Rule]] = [[] for _ in range(n_levels)]
    for rule in program.rules:
        strata[level_of.get(rule.head.relation, 0)].append(rule)
    return StratifiedPlan(program=program, strata=strata, level_of=level_of, edges=edges)
