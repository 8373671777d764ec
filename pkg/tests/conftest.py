import numpy as np
import pytest

import contactflow as cf


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)


@pytest.fixture
def free():
    return cf.builtin("free")


@pytest.fixture
def oscillator():
    return cf.builtin("oscillator")


@pytest.fixture
def eikonal():
    return cf.builtin("eikonal")
