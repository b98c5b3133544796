import numpy as np
import pytest

from omnidisplay import OpticalConfig


@pytest.fixture(scope="session")
def desk():
    return OpticalConfig.desk()


@pytest.fixture(scope="session")
def full():
    return OpticalConfig.full()


@pytest.fixture(scope="session")
def small():
    """128x128 panel for fast optical checks."""
    return OpticalConfig.desk(pixels=128)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
