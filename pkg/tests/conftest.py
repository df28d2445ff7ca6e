import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

from sharegame.scenario import ScenarioConfig, generate_scenario  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_scenario(preset="two-player", seed=0, **kw):
    kw.setdefault("background_dbm_hz", -165.0)
    return generate_scenario(ScenarioConfig(preset=preset, **kw), np.random.default_rng(seed), seed=seed)


@pytest.fixture
def two_player():
    return make_scenario("two-player", 3)


@pytest.fixture
def four_player():
    return make_scenario("four-player", 4)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
