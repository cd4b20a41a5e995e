"""Shared test helpers."""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=50,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("suite")


class CountingFunction:
    """Wraps a vectorized evaluator and counts rows seen."""

    def __init__(self, fn):
        self.fn = fn
        self.rows = 0

    def __call__(self, x):
        x = np.asarray(x)
        self.rows += x.shape[0] if x.ndim == 2 else 1
        return self.fn(x)


@pytest.fixture
def counting():
    return CountingFunction
