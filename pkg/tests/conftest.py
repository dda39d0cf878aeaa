"""Shared test configuration.

The terminal-summary hook reprints one PASS/FAIL line per acceptance
criterion after the run, so the verdicts survive output capture.
"""

import re

_ACCEPTANCE = re.compile(r"test_acceptance_(\d+)")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = rep.nodeid.rsplit("::", 1)[-1]
            m = _ACCEPTANCE.match(name)
            if m is None:
                continue
            verdict = "PASS" if outcome == "passed" else "FAIL"
            lines.append((int(m.group(1)), f"ACCEPTANCE {m.group(1)} {verdict}: {name}"))
    if not lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
