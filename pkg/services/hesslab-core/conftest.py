"""Shared fixtures: tiny networks and datasets small enough for dense oracles."""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src directory to Python path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from hesslab.data.datasets import Dataset, gaussian_synthetic
from hesslab.network.model import MlpModel, init_xavier


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_data() -> Dataset:
    return gaussian_synthetic(40, 4, 3, seed=1)


@pytest.fixture
def tiny_model() -> MlpModel:
    """(4, 5, 3): one hidden layer, layer-wise Hessians of size 25 and 18."""
    return init_xavier((4, 5, 3), seed=0)


@pytest.fixture
def deep_data() -> Dataset:
    return gaussian_synthetic(30, 5, 3, seed=2)


@pytest.fixture
def deep_model() -> MlpModel:
    return init_xavier((5, 4, 4, 3), seed=3)


@pytest.fixture
def random_symmetric(rng):
    def make(n: int) -> np.ndarray:
        a = rng.standard_normal((n, n))
        return a + a.T

    return make


@pytest.fixture(scope="session")
def mnist_dir() -> Path:
    """Directory holding the four standard MNIST files; full-size tests skip without it."""
    path = os.getenv("HESSLAB_MNIST_DIR")
    if not path or not Path(path).is_dir():
        pytest.skip("HESSLAB_MNIST_DIR not set")
    return Path(path)
