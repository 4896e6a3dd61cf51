import numpy as np
import pytest

from bridgeexit import hull_white_model


@pytest.fixture(scope="session")
def hw():
    return hull_white_model()


def random_half_plane_points(rng, n, x_range=(-3.0, 3.0), v_range=(0.05, 5.0)):
    xs = rng.uniform(*x_range, size=n)
    vs = rng.uniform(*v_range, size=n)
    return np.stack([xs, vs], axis=1)
