import numpy as np
import pytest

from avatarkit.config import load_config
from avatarkit.model import build_icub3_model


@pytest.fixture(scope="session")
def model():
    return build_icub3_model()


@pytest.fixture(scope="session")
def cfg():
    return load_config()


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
