import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rcspace import EchoStateNetwork, MackeyGlassReservoir, MeasureConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_esn():
    return EchoStateNetwork(n_nodes=10, washout=20)


@pytest.fixture
def small_dr():
    return MackeyGlassReservoir(n_virtual=10, theta=0.2, washout=5)


@pytest.fixture
def quick_measures():
    # Shrunk measurement lengths for unit tests.
    return MeasureConfig(stream_length=50, washout=20, mc_washout=60, mc_train=200, mc_test=200, seed=7)
