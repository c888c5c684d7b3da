import pytest

from precrash.cli import bundled
from precrash.ingestion import parse_records
from precrash.scenarios import load_rules


@pytest.fixture(scope="session")
def corpus():
    return parse_records(bundled("corpus.csv")).records


@pytest.fixture(scope="session")
def raw_corpus():
    return parse_records(bundled("raw_corpus.csv")).records


@pytest.fixture(scope="session")
def reference_rules():
    return load_rules(bundled("reference_rules.txt"))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""
    def record(line: str) -> None:
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
