import numpy as np
import pytest

from dlmf.data import Dataset
from dlmf.reference import RngStream


@pytest.fixture
def stream():
    return RngStream(1234, "tests")


@pytest.fixture
def small_dataset():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(40, 3))
    y = x[:, 0] - 0.5 * x[:, 1] + 0.1 * rng.normal(size=40)
    return Dataset(x, y)
