import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("g2flow", max_examples=25, deadline=None)
settings.load_profile("g2flow")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
