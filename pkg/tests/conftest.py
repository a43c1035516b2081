import sys
from pathlib import Path

import pytest

# Ensure the project root is in the Python path
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from src.backend.model.scenario import scenario_params


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: stochastic ensembles that take minutes")


@pytest.fixture
def ideal_params():
    return scenario_params("ideal")
