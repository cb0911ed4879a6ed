import numpy as np
import pytest

from mmwcell import (BlockageParams, LinkClassParams, PropagationModel,
                     RadioConfig)
from mmwcell.network import default_network


@pytest.fixture(scope="session")
def table_radio():
    return RadioConfig.from_db()


@pytest.fixture(scope="session")
def manhattan_access():
    """Dense-urban access process at 100 BS/km^2."""
    return PropagationModel(
        LinkClassParams(alpha_los=2.0, alpha_nlos=3.3, xi_los=5.2,
                        xi_nlos=7.6, beta_db=70.0),
        BlockageParams(c_inside=0.11, d_ball=200.0),
        100e-6)


@pytest.fixture(scope="session")
def net_defaults():
    return default_network()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
