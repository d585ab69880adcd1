import numpy as np
import pytest

from curveflow import build_grid, initial_profile


@pytest.fixture(scope="session")
def grid256():
    return build_grid(256)


@pytest.fixture(scope="session")
def grid512():
    return build_grid(512)


@pytest.fixture(scope="session")
def ellipse21_512(grid512):
    return initial_profile("ellipse", {"a": 2.0, "b": 1.0}, grid512)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
