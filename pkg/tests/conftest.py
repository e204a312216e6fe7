import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import toydata  # noqa: E402
from thaiseq.segment import build_lexicon  # noqa: E402


@pytest.fixture(scope="session")
def thai_lexicon():
    return build_lexicon(toydata.WORDS + ["ไทย"])


@pytest.fixture
def lexicon_file(tmp_path):
    return toydata.write_lexicon(tmp_path / "lexicon.txt")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL/SKIP line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "skipped", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            if outcome == "passed" and rep.when != "call":
                continue
            lines.append((nodeid.split("::")[-1], outcome.upper()))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(lines):
        terminalreporter.write_line(f"{outcome:<7} {name}")
