import contextlib

import pytest
from hypothesis import settings

from penning_ent.trap import TrapParameters

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# acceptance criterion number -> (title, passed, detail)
ACCEPTANCE = {}


@pytest.fixture
def trap():
    return TrapParameters()


@pytest.fixture
def criterion():
    """Context manager recording a PASS/FAIL line for one acceptance criterion."""

    @contextlib.contextmanager
    def record(number, title):
        info = {}
        try:
            yield info
        except BaseException:
            ACCEPTANCE[number] = (title, False, info.get("detail", ""))
            raise
        ACCEPTANCE[number] = (title, True, info.get("detail", ""))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        line = f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}"
        if detail:
            line += f"  ({detail})"
        tr.write_line(line)
