import numpy as np
import pytest

from bcw import BoxDomain, MediumParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def line():
    return BoxDomain.interval(np.pi, 16)


@pytest.fixture
def standard_medium():
    return MediumParams(a=1.0, b=2.0, c=1.0)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion: prints a PASS/FAIL line and asserts."""

    def record(number, title, ok, detail):
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
