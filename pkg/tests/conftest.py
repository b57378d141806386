import pytest

from eitmem.atomic import build_cesium_d2

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def scheme():
    return build_cesium_d2()


@pytest.fixture
def record():
    """Store a one-line verdict for the acceptance summary."""
    def _record(criterion, ok, detail):
        ACCEPTANCE[criterion] = (ok, detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
