"""Pure-Python join kernel: enumerate variable bindings for a rule body.

The engine compiles each positive body atom into a spec: one ``(kind,
payload)`` pair per argument position, where kind is

    0  constant            payload = the value to match
    1  bind variable slot  payload = slot index
    2  check variable slot payload = slot index
    3  wildcard            payload unused

``enumerate_bindings`` walks the atoms left to right, nested-loop style, and
returns every consistent binding. With ``capture`` set it also returns the
matched tuple per atom (needed for provenance).

The compiled twin in ``_cjoin.pyx`` implements the same loop; keep the two in
sync.
"""

from __future__ import annotations

KERNEL_NAME = "python"


def enumerate_bindings(relations, specs, nslots, capture=False):
    n = len(relations)
    binding = [None] * nslots
    chosen = [None] * n
    results = []

    def walk(i):
        if i == n:
            if capture:
                results.append((binding[:], tuple(chosen)))
            else:
                results.append(binding[:])
            return
        spec = specs[i]
        for tup in relations[i]:
            ok = True
            j = 0
            for kind, payload in spec:
                value = tup[j]
                if kind == 0:
                    if value != payload:
                        ok = False
                        break
                elif kind == 1:
                    binding[payload] = value
                elif kind == 2:
                    if binding[payload] != value:
                        ok = False
                        break
                j += 1
            if ok:
                if capture:
                    chosen[i] = tup
                walk(i + 1)

    walk(0)
    return results


def match_pattern(tuples, spec, binding):
    """True when some tuple matches the (0=const, 2=slot, 3=wildcard) pattern."""
    for tup in tuples:
        ok = True
        j = 0
        for kind, payload in spec:
            value = tup[j]
            if kind == 0:
                if value != payload:
                    ok = False
                    break
            elif kind == 2:
                if binding[payload] != value:
                    ok = False
                    break
            j += 1
        if ok:
            return True
    return False


def count_matches(tuples, spec, binding):
    """Number of tuples matching the pattern (distinct by set semantics)."""
    total = 0
    for tup in tuples:
        ok = True
        j = 0
        for kind, payload in spec:
            value = tup[j]
            if kind == 0:
                if value != payload:
                    ok = False
                    break
            elif kind == 2:
                if binding[payload] != value:
                    ok = False
                    break
            j += 1
        if ok:
            total += 1
    return total
