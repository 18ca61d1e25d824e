import pathlib
import sys

import pytest

TESTS = pathlib.Path(__file__).parent
sys.path.insert(0, str(TESTS))

import oracles  # noqa: E402

DATA = TESTS / "data"


@pytest.fixture
def fig1():
    return oracles.fig1_substrate()


@pytest.fixture
def fig2():
    return oracles.fig2_vnr()


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record a ``CRITERION n: PASS/FAIL ...`` line, echoed at the end of the run."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def emit(n, ok, detail):
        line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        lines.append(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
