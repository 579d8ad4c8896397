import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from ckt.config import ModelParams  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long classical integrations (deselect with -m 'not slow')")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fp_j1():
    """H_FP at j = 1, Omega = 1, eps = 1."""
    return ModelParams(j=1, epsilon=1.0)


def preset(kind: str, j: float = 10, epsilon: float = 0.0) -> ModelParams:
    kappa = {"fp": (0.0, 0.0), "nzt-equal": (1.0, 1.0), "nzt-opposite": (1.0, -1.0)}[kind]
    return ModelParams(j=j, epsilon=epsilon, kappa1=kappa[0], kappa2=kappa[1])
