import pytest

# (criterion, passed, detail) lines recorded by the acceptance tests
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    def report(number, title, passed, detail):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
