import io
from pathlib import Path

import pytest

from ringlet.vm import LanguageState, Status

CORPUS = Path(__file__).parent / "corpus"
CORPUS_FILES = sorted(CORPUS.glob("*.ring"))
# programs that only make sense once healed; they do not compile as written
HEALED_ONLY = {"16_tolerant.ring"}


def run_source(source, path=None, **opts):
    """Run guest source in a fresh state; returns ``(output, state)``."""
    out = io.StringIO()
    state = LanguageState(output=out, **opts)
    state.run(state.compile(source, path))
    return out.getvalue(), state


def output_of(source, path=None, **opts):
    text, state = run_source(source, path, **opts)
    assert state.status is Status.Halted, state.error
    return text


def expected_output(path: Path) -> str:
    return path.with_suffix(".out").read_text(encoding="utf-8")


@pytest.fixture
def state():
    out = io.StringIO()
    st = LanguageState(output=out)
    st.out = out
    yield st
    st.destroy()


# acceptance lines are gathered here and printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
