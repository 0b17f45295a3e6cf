import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from robustqml.model import build_logistic_circuit  # noqa: E402


@pytest.fixture(scope="session")
def layout():
    return build_logistic_circuit(4, 12)


# acceptance criteria report: criterion id -> (passed, detail)
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome for the terminal summary."""
    marker = request.node.get_closest_marker("criterion")
    key = marker.args[0] if marker else request.node.name
    info = {"detail": ""}
    yield info
    rep = getattr(request.node, "rep_call", None)
    ACCEPTANCE_RESULTS[key] = (rep is not None and rep.passed, info["detail"])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id): acceptance criterion identifier")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {key}  {detail}")
