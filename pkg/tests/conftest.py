"""
Shared fixtures for the test suite.
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from src.dataset import ColumnMeta, Dataset  # noqa: E402
from src.survival.cox import SurvivalOutcome  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long end-to-end recovery runs (deselect with -m 'not slow')")


def make_linear_dataset(n=400, beta=(1.0, -0.5), seed=0, censor_rate=0.3):
    """Exponential survival times with log-hazard X @ beta and uniform censoring."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, len(beta)))
    theta = X @ np.asarray(beta)
    death = rng.exponential(1.0 / (0.1 * np.exp(theta)))
    censor = rng.exponential(1.0 / (0.1 * censor_rate), size=n)
    durations = np.minimum(death, censor)
    events = (death <= censor).astype(int)
    columns = [ColumnMeta(name=f"x{i + 1}") for i in range(len(beta))]
    return Dataset(X=X, columns=columns, outcome=SurvivalOutcome(durations, events),
                   provenance={"formula": "linear", "theta": theta})


@pytest.fixture
def linear_data():
    return make_linear_dataset()


@pytest.fixture
def toy_outcome():
    """Three patients, all events, distinct times."""
    return SurvivalOutcome(np.array([1.0, 2.0, 3.0]), np.array([1, 1, 1]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
