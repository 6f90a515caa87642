import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from unruh_fluid import _backend  # noqa: E402


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend (numba skipped when unavailable)."""
    if request.param == "numba" and not _backend.HAVE_NUMBA:
        pytest.skip("numba not installed")
    monkeypatch.setattr(_backend, "USE_NUMBA", request.param == "numba")
    return request.param


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(request):
    """Recorder for the per-criterion PASS/FAIL summary printed at the end of the run."""
    def record(criterion, passed, detail):
        line = f"acceptance {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append((criterion, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
