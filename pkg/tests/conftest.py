"""Common fixtures for testing"""

import pytest

from trajmap.config import ScenarioConfig, TrackerConfig
from trajmap.geometry import BBox, RipplePair
from trajmap.simulator import generate

## Add --runslow option
# see: https://docs.pytest.org/en/latest/example/simple.html#control-skipping-of-tests-according-to-command-line-option


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: mark test as slow to run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        # --runslow given in cli: do not skip slow tests
        return
    skip_slow = pytest.mark.skip(reason="need --runslow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


## Test instances

@pytest.fixture
def ripple():
    return RipplePair(
        0, BBox(300, 950, 360, 120), BBox(700, 950, 360, 120)
    )


@pytest.fixture
def tracker_cfg():
    return TrackerConfig()


# Noiseless recording with 30 pellets, shared by the end-to-end tests
@pytest.fixture(scope="session")
def noiseless_scenario():
    return generate(ScenarioConfig(n_pellets=30, seed=1))


@pytest.fixture(scope="session")
def small_scenario():
    return generate(ScenarioConfig(n_pellets=4, n_frames=160, seed=3))
