"""Collects per-criterion outcomes of tests marked ``acceptance(k)``.

A criterion passes when every test carrying its number passes; the terminal
summary prints one line per criterion.
"""

import pytest

_RESULTS: dict = {}
_TITLES = {
    1: "geometric DIC convergence",
    2: "normal WBIC convergence by schedule",
    3: "Laplace WBIC limit",
    4: "oracle equivalence (quadrature, closed forms)",
    5: "posterior consistency and eta-rescaling",
    6: "property suites",
    7: "determinism across worker counts",
}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry = _RESULTS.setdefault(marker.args[0], {"passed": 0, "failed": []})
        if report.passed:
            entry["passed"] += 1
        else:
            entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_TITLES):
        entry = _RESULTS.get(k)
        if entry is None:
            continue
        status = "FAIL" if entry["failed"] else "PASS"
        detail = f"{entry['passed']} check(s) passed"
        if entry["failed"]:
            detail += "; failed: " + ", ".join(entry["failed"])
        terminalreporter.write_line(f"criterion {k} [{status}] {_TITLES[k]}: {detail}")
