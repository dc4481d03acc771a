"""Shared test fixtures: inline dataset builders and the bundled snapshot."""

from __future__ import annotations

from pathlib import Path

import pytest

from vaultscope.data import load_dataset

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DATA = REPO_ROOT / "fixtures" / "data"
FIXTURE_GOLDEN = REPO_ROOT / "fixtures" / "golden"


def write_files(directory: Path, files: dict[str, str]) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    for name, body in files.items():
        (directory / name).write_text(body, encoding="utf-8")
    return directory


@pytest.fixture
def make_dataset(tmp_path):
    """Write the given CSV/JSON bodies into a temp dir and parse them."""

    def _make(files: dict[str, str]):
        return load_dataset(write_files(tmp_path / "data", files))

    return _make


@pytest.fixture(scope="session")
def fixture_dataset():
    if not FIXTURE_DATA.is_dir():
        pytest.skip("bundled fixture not generated")
    return load_dataset(FIXTURE_DATA)
