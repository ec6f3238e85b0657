"""Join-kernel selection: compiled extension when available, else pure Python.

Set MOODLOGIC_KERNEL=python to force the fallback, or MOODLOGIC_KERNEL=c to
require the compiled extension (raising if it is missing).
"""

from __future__ import annotations

import os

from . import pyjoin

_requested = os.environ.get("MOODLOGIC_KERNEL", "").strip().lower()

if _requested in ("", "c", "auto"):
    try:
        from . import _cjoin as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "c":
            raise ImportError(
                "MOODLOGIC_KERNEL=c but the compiled kernel is not built; "
                "reinstall with `pip install -e .` or unset MOODLOGIC_KERNEL"
            )
        _impl = pyjoin
elif _requested == "python":
    _impl = pyjoin
else:
    raise ValueError(f"unknown MOODLOGIC_KERNEL value: {_requested!r}")

KERNEL_NAME: str = _impl.KERNEL_NAME
enumerate_bindings = _impl.enumerate_bindings
match_pattern = _impl.match_pattern
count_matches = _impl.count_matches


def get_kernel(name: str):
    """Explicit kernel lookup, used by the benchmark to compare backends."""
    if name == "python":
        return pyjoin
    if name == "c":
        from . import _cjoin  # type: ignore[attr-defined]

        return _cjoin
    raise ValueError(f"unknown kernel: {name!r}")
