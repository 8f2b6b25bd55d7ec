import pytest


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for the acceptance summary and return the verdict."""
    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" | {detail}" if detail else "")
        print(line)
        request.config.acceptance_lines.append((number, line))
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = sorted(getattr(config, "acceptance_lines", []))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)
