import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def sample_box(rng, n_points, dim, half_width=10.0):
    """Pseudorandom points in the box [-half_width, half_width]^dim."""
    return rng.uniform(-half_width, half_width, size=(n_points, dim))
