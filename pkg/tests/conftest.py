import numpy as np
import pytest

import spectral_cascade as sc


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def demo_instance():
    """A (1,2,2) instance shared by the slower integration tests."""
    return sc.generate_instance((1, 2, 2), seed=3)


@pytest.fixture(scope="session")
def demo_cascade(demo_instance):
    return sc.choose_parameters(
        demo_instance.model, demo_instance.L, 1e-3, law=demo_instance.law
    )
