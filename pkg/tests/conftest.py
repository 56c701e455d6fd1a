import numpy as np
import pytest

from mcalab.trajectory import iso_double_lane_change
from mcalab.washout import cw_optimize


@pytest.fixture(scope="session")
def iso_ref():
    return iso_double_lane_change(10.0)


@pytest.fixture(scope="session")
def cw_iso(iso_ref):
    """Optimised classical washout on the ISO manoeuvre (shared; ~30 s)."""
    return cw_optimize(iso_ref, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
