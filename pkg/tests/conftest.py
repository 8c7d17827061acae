import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criterion lines after the run, outside capture."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
