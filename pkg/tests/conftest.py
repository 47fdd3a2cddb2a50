from __future__ import annotations

from pathlib import Path

import pytest

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "dblp50"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def index_dir(tmp_path_factory) -> Path:
    from dbtrail.pipeline import build_index_dir

    out = tmp_path_factory.mktemp("index") / "dblp50"
    build_index_dir(FIXTURE_DIR, out)
    return out


@pytest.fixture(scope="session")
def engine(index_dir):
    from dbtrail.pipeline import SearchEngine

    return SearchEngine.load(index_dir)


@pytest.fixture()
def fresh_engine(index_dir):
    """Engine with untouched access counters (session engine accumulates)."""
    from dbtrail.pipeline import SearchEngine

    return SearchEngine.load(index_dir)
