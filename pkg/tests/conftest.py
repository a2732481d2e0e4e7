import pytest

from fdrlab.gamma import make_lord_gamma, make_power_gamma
from fdrlab.types import AlgorithmConfig

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def power_gamma():
    return make_power_gamma(1.6)


@pytest.fixture(scope="session")
def lord_gamma():
    return make_lord_gamma()


@pytest.fixture(scope="session")
def base_config(power_gamma):
    """The worked-example parameter point: alpha .05, w0 .025, lambda .25, tau .5."""
    return AlgorithmConfig(alpha=0.05, w0=0.025, lam=0.25, tau=0.5, gamma=power_gamma)
