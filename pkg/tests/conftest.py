import numpy as np
import pytest

from swobs import load_example


@pytest.fixture(scope="session")
def ex1():
    return load_example(1)


@pytest.fixture(scope="session")
def ex2():
    return load_example(2)


@pytest.fixture(scope="session")
def ex3():
    return load_example(3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
