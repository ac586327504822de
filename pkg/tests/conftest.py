import pytest

_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(k, passed, detail)``.

    The line is written to the terminal immediately and repeated in the
    end-of-session summary.
    """
    lines = request.config.stash.setdefault(_KEY, [])
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def record(k, passed, detail=""):
        line = f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
