"""
Shared pytest fixtures.
"""

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def correlations_csv() -> Path:
    return FIXTURES / "correlations.csv"


@pytest.fixture
def pvalues_csv() -> Path:
    return FIXTURES / "pvalues.csv"


@pytest.fixture
def bad_rows_csv() -> Path:
    return FIXTURES / "bad_rows.csv"


@pytest.fixture
def database_url(tmp_path) -> str:
    return f"sqlite+aiosqlite:///{tmp_path / 'store' / 'replisum.db'}"


@pytest.fixture
def bad_encoding_csv() -> Path:
    return FIXTURES / "bad_encoding.csv"
