import shutil

import pytest

from papp_lab.sat import default_solver_command

_CRITERIA: dict[int, tuple[bool, str]] = {}

# outcomes of the randomized invariant suites seen in this session, by node id
PROPERTY_RESULTS: dict[str, bool] = {}
PROPERTY_COLLECTED: set[str] = set()


def record_criterion(number: int, passed: bool, detail: str) -> None:
    _CRITERIA[number] = (passed, detail)


@pytest.fixture
def solver_cmd():
    cmd = default_solver_command()
    if cmd is None:
        pytest.fail("no external SAT solver available (install glucose or kissat, or set PAPP_LAB_SOLVER)")
    return cmd


@pytest.fixture
def fake_solver(tmp_path):
    """Write an executable shell script acting as a solver and return a template for it."""

    def make(body: str) -> str:
        path = tmp_path / "fake_solver.sh"
        path.write_text("#!/bin/sh\n" + body + "\n")
        path.chmod(0o755)
        return f"{path} {{cnf}}"

    if shutil.which("sh") is None:
        pytest.skip("needs /bin/sh")
    return make


def pytest_collection_modifyitems(items):
    PROPERTY_COLLECTED.update(item.nodeid for item in items if item.get_closest_marker("property"))
    # the property-suite criterion reads the other results, so it runs last
    last = [item for item in items if item.get_closest_marker("after_properties")]
    items[:] = [item for item in items if item not in last] + last


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.get_closest_marker("property") and (report.when == "call" or report.failed):
        PROPERTY_RESULTS[item.nodeid] = PROPERTY_RESULTS.get(item.nodeid, True) and report.passed


def pytest_configure(config):
    config.addinivalue_line("markers", "after_properties: runs after every property-suite test")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
