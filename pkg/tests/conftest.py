import numpy as np
import pytest

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def criterion(request):
    """Record one ``CRITERION n: STATUS (details)`` line for the end-of-run summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number, passed, detail, status=None):
        status = status or ("PASS" if passed else "FAIL")
        line = f"CRITERION {number}: {status} ({detail})"
        print(line)
        lines.append((number, line))
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
