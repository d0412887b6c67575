import numpy as np
import pytest
from hypothesis import settings

from hymtorus import TorusGeometry

settings.register_profile("hymtorus", max_examples=25, deadline=None)
settings.load_profile("hymtorus")


@pytest.fixture
def t2():
    return TorusGeometry.square(1, 32)


@pytest.fixture
def t2_rect():
    return TorusGeometry(1, (32, 24), (1.0, 0.75))


@pytest.fixture
def t4():
    return TorusGeometry.square(2, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
