"""Suite-wide pytest plumbing.

The acceptance tests record one verdict line each; echoing them in the
terminal summary keeps the scorecard visible even with output capture on.
"""

VERDICTS: list[str] = []


def record_verdict(line: str) -> None:
    VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance scorecard")
    for line in sorted(VERDICTS):
        terminalreporter.write_line(line)
