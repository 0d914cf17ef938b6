import os

import pytest


def pytest_collection_modifyitems(config, items):
    if os.environ.get("COARSEHX_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="slow; set COARSEHX_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Label of the acceptance criterion exercised by the test."""
    return request.node.get_closest_marker("criterion").args[0]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion label")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker and call.when == "call":
        label = marker.args[0]
        ok = call.excinfo is None and ACCEPTANCE.get(label) != "FAIL"
        ACCEPTANCE[label] = "PASS" if ok else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: (int(s.split()[0].rstrip("ab")), s)):
        terminalreporter.write_line(f"{ACCEPTANCE[label]}  criterion {label}")
