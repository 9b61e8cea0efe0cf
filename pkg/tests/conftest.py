"""One PASS/FAIL line per acceptance criterion in the terminal summary."""

_CRITERIA: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        name = report.nodeid.split("::", 1)[1]
        _CRITERIA.append((name, "PASS" if report.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, detail in _CRITERIA:
        terminalreporter.write_line(f"{verdict}  {name}  {detail}")
