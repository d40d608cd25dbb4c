"""Shared grids and the per-criterion acceptance summary."""

import itertools
from collections import OrderedDict

import pytest

GRID_K = (0.01, 0.1, 1.0, 5.0, 10.0)
GRID_U = (0.5, 0.65, 1.0, 2.0, 4.0)
GRID_P = (0.0, 0.25, 0.5, 0.75, 1.0)
PARAM_GRID = list(itertools.product(GRID_K, GRID_U, GRID_P))
RHO_CHECKS = (0.2, 0.5, 1.0, 1.5, 2.5)

_results = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion covered by a test")


def pytest_collection_modifyitems(items):
    # order of first appearance decides the summary order
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _results.setdefault(mark.args[0], {})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    slot = _results.setdefault(mark.args[0], {})
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        slot[item.name] = "pass" if rep.passed else ("skip" if rep.skipped else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not any(_results.values()):
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for label, tests in _results.items():
        if not tests:
            continue
        ok = all(v == "pass" for v in tests.values())
        failed = [name for name, v in tests.items() if v != "pass"]
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}"
        if failed:
            line += f"  (failing: {', '.join(failed)})"
        tr.write_line(line)
