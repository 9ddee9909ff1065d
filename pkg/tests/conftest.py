from __future__ import annotations

import pytest

from qcldpc import build_field, build_full, disperse, expand, make_code

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def gf16():
    return build_field(16)


@pytest.fixture(scope="session")
def ex1_array(gf16):
    """Full 15x15 CPM array over GF(16) with c=3, n=5."""
    return disperse(build_full(gf16, 3, 5))


@pytest.fixture(scope="session")
def ex1_code(ex1_array):
    return make_code(expand(ex1_array), ex1_array)
