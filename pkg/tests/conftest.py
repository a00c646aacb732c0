import numpy as np
import pytest

from coverage_lab.oracle import FeatureLaw, LocationFamily, MeanFunction, NoiseModel


@pytest.fixture
def gaussian_linear_family():
    """Y = 2x + 1 + N(0,1), X ~ U[0,1]: the workhorse family for coverage runs."""
    return LocationFamily(
        mean=MeanFunction("linear", coef=(2.0,), intercept=1.0),
        noise=NoiseModel("gaussian", 1.0),
        features=FeatureLaw("uniform-box", dim=1, low=0.0, high=1.0),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
