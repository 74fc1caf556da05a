"""Shared fixtures and the acceptance report printed after the run."""

from __future__ import annotations

from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

#: Lines collected by the acceptance suite, one per criterion.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return SCENARIOS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
