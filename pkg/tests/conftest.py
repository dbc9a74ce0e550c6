import numpy as np
import pytest

from sns_chain.chain import ChainParams

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one acceptance line: ``acceptance(k, passed, detail)``."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(k, passed, detail):
        line = f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append((k, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines, key=lambda kl: kl[0]):
        terminalreporter.write_line(line)


@pytest.fixture
def n2():
    """The N=2 hand-worked fixture: omega = gamma = k = 1, kappa = 0, T1 = 2, TN = 1."""
    return ChainParams(N=2, omega=1.0, gamma=1.0, kappa=0.0, T1=2.0, TN=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
