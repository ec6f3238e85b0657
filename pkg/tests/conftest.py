from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT / "src") not in sys.path:
    try:
        import moodlogic  # noqa: F401
    except ImportError:
        sys.path.insert(0, str(ROOT / "src"))

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures() -> Path:
    return FIXTURES


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def edge_path_source() -> str:
    return fixture_text("listing_edge_path.dl")


@pytest.fixture(scope="session")
def diagnosis_source() -> str:
    return fixture_text("listing_diagnosis.dl")
