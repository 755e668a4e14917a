import numpy as np
import pytest

from twowell.energy import WellParams


@pytest.fixture
def p() -> WellParams:
    """The benchmark wells, lambda = 1.5."""
    return WellParams(1.5)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
