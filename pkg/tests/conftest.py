"""Suite-wide audit of every mapping the solver pipelines produce.

Each decoded or packed solution is re-checked by the independent validator,
and raw solver vectors are compared with the exact s/b definitions. The
acceptance test for constraint satisfaction reads the audit after every other
test has run; it is moved to the end of the collection for that reason.
"""

from __future__ import annotations

import audit
import pytest

import xbarmap.baseline as _baseline
import xbarmap.optimizer as _optimizer
import xbarmap.solution as _solution

audit.install(_solution, _optimizer, _baseline)

CRITERION_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")
    config.addinivalue_line("markers", "audit_last: run after every other test")


def pytest_collection_modifyitems(session, config, items):
    last = [it for it in items if it.get_closest_marker("audit_last")]
    rest = [it for it in items if not it.get_closest_marker("audit_last")]
    items[:] = rest + last


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = "PASS" if rep.outcome == "passed" else ("SKIP" if rep.outcome == "skipped" else "FAIL")
        prev = CRITERION_RESULTS.get(n)
        if prev is None or prev[0] == "PASS":
            CRITERION_RESULTS[n] = (status, title)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERION_RESULTS):
        status, title = CRITERION_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}")
    for line in audit.NOTES:
        terminalreporter.write_line(f"note: {line}")
    terminalreporter.write_line(
        f"audit: {audit.STATE.checked} solutions and {audit.STATE.raw_checked} raw vectors checked, "
        f"{len(audit.STATE.violations)} violations"
    )
