import re

import pytest

_RESULTS: dict = {}
_NOTES: dict = {}
_PATTERN = re.compile(r"test_criterion_(\d+)_(\w+)")


def _criterion(nodeid: str):
    m = _PATTERN.search(nodeid)
    return (int(m.group(1)), m.group(2).replace("_", " ")) if m else None


@pytest.fixture
def record(request):
    """Attach a short measured-value note to the acceptance line of this test."""
    key = _criterion(request.node.nodeid)

    def _record(note: str) -> None:
        if key is not None:
            _NOTES[key] = note

    return _record


def pytest_runtest_logreport(report):
    key = _criterion(report.nodeid)
    if key is None:
        return
    if report.when == "call" or report.failed:
        if report.failed:
            _RESULTS[key] = "FAIL"
        else:
            _RESULTS.setdefault(key, "PASS" if report.passed else report.outcome.upper())


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), outcome in sorted(_RESULTS.items()):
        note = _NOTES.get((num, name))
        terminalreporter.write_line(f"criterion {num} {name}: {outcome}" + (f" ({note})" if note else ""))
