import pytest

_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collect one verdict line per acceptance criterion for the summary."""

    def log(number: int, ok: bool, detail: str) -> None:
        _acceptance_lines.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")

    return log


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
