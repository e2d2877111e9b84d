import os
from contextlib import contextmanager

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE = {}


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.notes = number, title, []

    def note(self, text):
        self.notes.append(str(text))


@contextmanager
def criterion(number, title):
    """Record PASS/FAIL for one acceptance criterion; failures still raise."""
    c = _Criterion(number, title)
    try:
        yield c
    except BaseException as exc:
        ACCEPTANCE[number] = ("FAIL", title, c.notes + [f"{type(exc).__name__}: {exc}"[:300]])
        raise
    ACCEPTANCE[number] = ("PASS", title, c.notes)


@pytest.fixture
def acceptance():
    return criterion


def format_acceptance():
    lines = []
    for n in sorted(ACCEPTANCE):
        status, title, notes = ACCEPTANCE[n]
        lines.append(f"{status} criterion {n}: {title}")
        lines += [f"    {x}" for x in notes]
    return lines


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in format_acceptance():
            terminalreporter.write_line(line)
