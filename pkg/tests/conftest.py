import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from genbounds import load_fixture


@pytest.fixture(scope="session")
def inst_a():
    """Standard: Z = {0,1} uniform, n = 2, lowest-index-tie ERM, 0/1 loss."""
    return load_fixture("inst_a")[1]


@pytest.fixture(scope="session")
def inst_b():
    """Subset: Z = {0,1} uniform, n = 1, identity learner, 0/1 loss."""
    return load_fixture("inst_b")[1]


@pytest.fixture(scope="session")
def inst_c():
    """Standard: constant uniform learner (W independent of Z), n = 2."""
    return load_fixture("inst_c")[1]


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
