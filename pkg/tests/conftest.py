import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: criterion(name, passed, detail)."""

    def record(name, passed, detail=""):
        line = f"{name}: {'PASS' if passed else 'FAIL'}" + (f"  ({detail})" if detail else "")
        request.config.stash[_RESULTS].append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
