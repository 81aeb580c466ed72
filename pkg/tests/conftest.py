"""
Shared fixtures for the test suite.
"""

import json
import os

import pytest

from src.distributions import ParametricLoss, PointMass
from src.game import Game

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")


def data_path(*parts: str) -> str:
    return os.path.join(DATA_DIR, *parts)


def gumbel(a: float, b: float) -> ParametricLoss:
    return ParametricLoss("gumbel", {"a": a, "b": b})


@pytest.fixture
def mean_pair():
    """Same variance, means 30 and 31."""
    return gumbel(31.0063, 1.74346), gumbel(32.0063, 1.74346)


@pytest.fixture
def variance_pair():
    """Same mean 5, variances 8 and 7."""
    return gumbel(6.27294, 2.20532), gumbel(6.19073, 2.06288)


@pytest.fixture
def shape_pair():
    """Matching first two moments, different shapes."""
    return (ParametricLoss("gamma", {"a": 260.345, "b": 0.0373929}),
            ParametricLoss("weibull", {"a": 20, "b": 10}))


@pytest.fixture
def gumbel_game():
    """Pure saddle at (row 0, column 1): rows are ordered, columns too."""
    return Game([[gumbel(31.0063, 1.74346), gumbel(32.0063, 1.74346)],
                 [gumbel(33.0063, 1.74346), gumbel(34.0063, 1.74346)]])


@pytest.fixture
def point_game():
    """The scalar game [[3, 1], [2, 4]] with value 2.5."""
    return Game([[PointMass(3), PointMass(1)], [PointMass(2), PointMass(4)]])


@pytest.fixture
def config_file(tmp_path):
    """Write a minimal valid application config and return its path."""
    def _write(**overrides):
        config = {
            "output_directory": str(tmp_path / "output"),
            "log_file_path": str(tmp_path / "logs" / "app.log"),
            "k_max": 32,
            "ordering": {},
            "solver": {"max_iters": 20000},
            "truncation": {},
        }
        config.update(overrides)
        path = tmp_path / "app_config.json"
        path.write_text(json.dumps(config), encoding="utf-8")
        return str(path)
    return _write
