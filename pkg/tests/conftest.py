"""Shared test configuration: the ``criterion`` marker and the acceptance summary."""
from collections import defaultdict

CRITERIA = {
    1: "SSP depends on the norm",
    2: "Bishop-Phelps hull bounds",
    3: "nested Bishop-Phelps cones separate",
    4: "sublevel base norm bound",
    5: "augmented dual pairs exist iff pointed",
    6: "Henig dilation inside the eps-neighbourhood",
    7: "existence via scalarization",
    8: "efficient set of the curve fixture",
    9: "proper efficiency of the curve fixture",
    10: "section shrinking",
    11: "density of proper efficient points",
    12: "min_set matches brute force",
    13: "global invariants",
}

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


def pytest_runtest_logreport(report):
    marker = dict(report.user_properties).get("criterion")
    if marker is None:
        return
    if report.when == "call" or report.failed or report.skipped:
        _outcomes[marker].append(report.passed and report.when == "call")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} ({title}): {status}")
