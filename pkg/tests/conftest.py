import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from metastable.systems import HopperParams, HopperSystem, find_fixed_point

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_psd(rng, d, rank=None):
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank))
    return G @ G.T


@pytest.fixture(scope="session")
def hopper():
    return HopperSystem()


@pytest.fixture(scope="session")
def hopper_fixed_point():
    return find_fixed_point(HopperParams())


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
