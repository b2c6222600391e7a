import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record the one-line verdict of an acceptance criterion; printed in the terminal summary."""
    number = request.node.get_closest_marker("criterion").args[0]

    def record(ok: bool, detail: str):
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    yield record
    if number not in ACCEPTANCE_LINES:
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: FAIL  (error before a verdict was reached)"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
