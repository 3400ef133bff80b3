import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def reference_landmarks():
    from phasespot.synthetic import landmark_layout

    return landmark_layout((224, 224))
