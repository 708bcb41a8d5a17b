import numpy as np
import pytest

from superliouville import _backend
from superliouville.geometry import Grid


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    prev = _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid65():
    return Grid.square(8.0, 65)
