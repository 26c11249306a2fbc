"""Fixtures and reporting hooks; shared builders live in support.py."""
from __future__ import annotations

from pathlib import Path

import pytest

from support import ACCEPTANCE_LINES, FIXTURES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines after the normal test summary."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def toy_paths() -> dict[str, Path]:
    return {
        "sense_vecs": FIXTURES / "senses.vecs",
        "sense_keys": FIXTURES / "senses.keys",
        "ctx_vecs": FIXTURES / "contexts.vecs",
        "ctx_keys": FIXTURES / "contexts.keys",
        "lexicon": FIXTURES / "lexicon.jsonl",
    }
