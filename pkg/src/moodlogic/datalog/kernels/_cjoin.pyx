# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled join kernel; same contract and loop structure as pyjoin.py."""

KERNEL_NAME = "c"


def enumerate_bindings(list relations, specs, Py_ssize_t nslots, bint capture=False):
    cdef Py_ssize_t n = len(relations)
    cdef list binding = [None] * nslots
    cdef list chosen = [None] * n
    cdef list results = []
    cdef list specs_l = [list(s) for s in specs]
    _walk(0, n, relations, specs_l, binding, chosen, results, capture)
    return results


cdef void _walk(Py_ssize_t i, Py_ssize_t n, list relations, list specs,
                list binding, list chosen, list results, bint capture):
    if i == n:
        if capture:
            results.append((binding[:], tuple(chosen)))
        else:
            results.append(binding[:])
        return
    cdef list spec = <list> specs[i]
    cdef Py_ssize_t j, kind
    cdef object payload, value, tup
    cdef bint ok
    for tup in relations[i]:
        ok = True
        j = 0
        for kind_payload in spec:
            kind = <Py_ssize_t> kind_payload[0]
            payload = kind_payload[1]
            value = tup[j]
            if kind == 0:
                if value != payload:
                    ok = False
                    break
            elif kind == 1:
                binding[<Py_ssize_t> payload] = value
            elif kind == 2:
                if binding[<Py_ssize_t> payload] != value:
                    ok = False
                    break
            j += 1
        if ok:
            if capture:
                chosen[i] = tup
            _walk(i + 1, n, relations, specs, binding, chosen, results, capture)


def match_pattern(tuples, spec, list binding):
    cdef Py_ssize_t j, kind
    cdef object payload, value
    cdef bint ok
    for tup in tuples:
        ok = True
        j = 0
        for kind_payload in spec:
            kind = <Py_ssize_t> kind_payload[0]
            payload = kind_payload[1]
            value = tup[j]
            if kind == 0:
                if value != payload:
                    ok = False
                    break
            elif kind == 2:
                if binding[<Py_ssize_t> payload] != value:
                    ok = False
                    break
            j += 1
        if ok:
            return True
    return False


def count_matches(tuples, spec, list binding):
    cdef Py_ssize_t total = 0
    cdef Py_ssize_t j, kind
    cdef object payload, value
    cdef bint ok
    for tup in tuples:
        ok = True
        j = 0
        for kind_payload in spec:
            kind = <Py_ssize_t> kind_payload[0]
            payload = kind_payload[1]
            value = tup[j]
            if kind == 0:
                if value != payload:
                    ok = False
                    break
            elif kind == 2:
                if binding[<Py_ssize_t> payload] != value:
                    ok = False
                    break
            j += 1
        if ok:
            total += 1
    return total
