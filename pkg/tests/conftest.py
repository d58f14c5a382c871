"""Shared test plumbing: the acceptance-criteria summary reporter."""

from __future__ import annotations

CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, detail: str, ok: bool = True) -> None:
    CRITERIA[number] = (ok, detail)
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {number}] {status} - {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, detail = CRITERIA[number]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
