import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from floquet_dde import DelayCocycle, GridSpec, TelegraphDriver, TelegraphPoint, TorusDriver, TorusPoint
from floquet_dde.floquet_bundle import FloquetBundle

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")

QUASI = dict(a0=0.1, a1=0.05, b0=1.0, b1=0.5)


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(64)


@pytest.fixture(scope="session")
def quasi_cocycle(grid64):
    return DelayCocycle(TorusDriver(**QUASI), grid64)


@pytest.fixture(scope="session")
def quasi_bundle(quasi_cocycle):
    return FloquetBundle(quasi_cocycle)


@pytest.fixture(scope="session")
def delay_one(grid64):
    """a = 0, b = 1."""
    return DelayCocycle(TorusDriver(0.0, 0.0, 1.0, 0.0), grid64)


@pytest.fixture(scope="session")
def telegraph_cocycle(grid64):
    drv = TelegraphDriver((0.2, -0.3), (0.5, 1.5), (0.4, 0.6), hold_rate=1.0, tick=grid64.h)
    return DelayCocycle(drv, grid64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def origin():
    return TorusPoint(0.0)


@pytest.fixture(scope="session")
def tele_origin():
    return TelegraphPoint(0, 3)


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))
    elif report.when == "setup" and report.failed and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], "error"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
