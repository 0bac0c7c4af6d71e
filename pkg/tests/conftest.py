import numpy as np
import pytest

from mrpfg.localmodel import LocalModelConfig, identify_lifted_frf
from mrpfg.lti import make_demo_loop, simulate_multirate_loop
from mrpfg.pfg import pfg_analytic
from mrpfg.signals import RateConfig, multisine

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def demo_loop():
    return make_demo_loop()


@pytest.fixture(scope="session")
def small_loop():
    """Demo loop on a short 1440-sample record (M = 480)."""
    return make_demo_loop(RateConfig.from_frequencies(240.0, 3, 1440))


@pytest.fixture(scope="session")
def demo_analytic(demo_loop):
    return pfg_analytic(demo_loop)


@pytest.fixture(scope="session")
def demo_record(demo_loop):
    """One multisine record from zero initial state, transient included."""
    w = multisine(demo_loop.rate, seed=1)
    z = simulate_multirate_loop(demo_loop, w, n_settle_periods=0)["z"]
    return w, z


@pytest.fixture(scope="session")
def demo_identified(demo_loop, demo_record):
    w, z = demo_record
    return identify_lifted_frf(w, z, demo_loop.rate.fac, LocalModelConfig(), demo_loop.rate.tsh)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
