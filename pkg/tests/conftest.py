import math

import numpy as np
import pytest

from simo_lqr import LqrWeights, ScenarioConfig, design, linearize, robot_system, run_scenario

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def robot():
    return robot_system()


@pytest.fixture(scope="session")
def robot_model(robot):
    return linearize(robot, np.zeros(4))


@pytest.fixture(scope="session")
def robot_design(robot_model):
    return design(robot_model, LqrWeights.default(4))


@pytest.fixture(scope="session")
def robot_gains(robot_design):
    return robot_design[0]


@pytest.fixture(scope="session")
def tilt_runs(robot, robot_gains):
    """The four 25 s experiments from a 10 degree tilt, keyed by controller kind."""
    x0 = (math.radians(10.0), 0.0, 0.0, 0.0)
    kinds = ("sfr_continuous", "pd_continuous", "pd_discrete", "sfr_discrete")
    return {k: run_scenario(robot, robot_gains, ScenarioConfig(k, x0)) for k in kinds}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
