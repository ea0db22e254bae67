import numpy as np
import pytest

from ball_model import Configuration, from_klein
from config import DEFAULT_TOLERANCES

TETRAHEDRON_DIRECTIONS = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3.0)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size acceptance runs (deselect with -m 'not slow')")


def tetrahedron(radius: float = 0.5) -> Configuration:
    return Configuration(tuple(radius * TETRAHEDRON_DIRECTIONS))


def z_axis(heights=(-0.6, -0.2, 0.2, 0.6)) -> Configuration:
    """Ordered toward the north pole, so every t_ij is 0 or infinity."""
    return Configuration(tuple([0.0, 0.0, h] for h in heights))


def klein_plane(points) -> Configuration:
    """Ball points of the equatorial plane given by their Klein-model coordinates."""
    return Configuration(tuple(from_klein(np.array([x, y, 0.0])) for x, y in points))


@pytest.fixture
def tolerances():
    return DEFAULT_TOLERANCES


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


@pytest.fixture
def regular_tetrahedron():
    return tetrahedron()


@pytest.fixture
def collinear():
    return z_axis()


@pytest.fixture
def coplanar_hull():
    # the last point sits inside the triangle of the first three
    return klein_plane([(-0.5, -0.2), (0.5, -0.2), (0.0, 0.5), (0.0, 0.0)])


@pytest.fixture
def coplanar_convex():
    return klein_plane([(-0.5, 0.0), (0.0, -0.5), (0.5, 0.0), (0.0, 0.5)])
