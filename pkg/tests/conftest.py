import pytest

# (criterion, passed, detail) lines filled in by the acceptance tests
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def report_criterion():
    def record(name: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append((name, bool(passed), detail))
        print(f"{name}: {'PASS' if passed else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")
