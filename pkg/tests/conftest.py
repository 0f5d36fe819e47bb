"""Shared fixtures and the --runslow switch."""

import numpy as np
import pytest

from adaglr.core.data import Dataset


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run Monte Carlo checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def linear_data(rng):
    """n=60, p=3 linear model with intercept 0.5 and unit-variance noise."""
    X = rng.standard_normal((60, 3))
    y = X @ np.array([1.0, -0.5, 0.25]) + 0.5 + rng.standard_normal(60)
    return Dataset(X, y)


@pytest.fixture
def single_index_data(rng):
    """n=200, p=3 single-index model along (1, 1, 0)/sqrt(2)."""
    X = rng.standard_normal((200, 3))
    t = X @ (np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0))
    y = t + 0.8 * t ** 2 + 0.2 * rng.standard_normal(200)
    return Dataset(X, y)


@pytest.fixture
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("y,a,b\n1.0,2.0,3.5\n2.0,4.0,1.0\n4.5,5.0,2.0\n", encoding="utf-8")
    return path
