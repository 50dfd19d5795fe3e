import numpy as np
import pytest

from gutsim.grid import build_region
from gutsim.scenario import demo_scenario


@pytest.fixture(scope="session")
def square3() -> "SearchRegion":
    """3x3 uniform-cost grid, every cell in-region."""
    return build_region([(0, 0), (90, 0), (90, 90), (0, 90)], 30.0)


@pytest.fixture(scope="session")
def square10():
    """10x10 uniform-cost grid (300 m square)."""
    return build_region([(0, 0), (300, 0), (300, 300), (0, 300)], 30.0)


@pytest.fixture(scope="session")
def square20():
    return build_region([(0, 0), (600, 0), (600, 600), (0, 600)], 30.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def demo():
    return demo_scenario()
