import numpy as np
import pytest

from scatter_ab.domain import GridSpec, load_domain, rasterize
from scatter_ab.functions import GridFunction


@pytest.fixture(scope="session")
def square():
    return load_domain("square")


@pytest.fixture(scope="session")
def lshape():
    return load_domain("lshape")


def disk_grid(n: int, margin: float = 1.5) -> GridSpec:
    """Grid over [-margin, margin]^2 with the unit disk as mask."""
    h = 2 * margin / n
    proto = GridSpec(origin=(-margin, -margin), h=h, nx=n, ny=n, mask=np.zeros((n, n), bool))
    mask = np.abs(proto.centers()) < 1.0
    return GridSpec(origin=proto.origin, h=h, nx=n, ny=n, mask=mask)


def gaussian_on(grid, center=0.5 + 0.5j, width=0.15):
    return GridFunction.from_callable(grid, lambda z: np.exp(-np.abs(z - center) ** 2 / width ** 2))


@pytest.fixture
def grid64(square):
    return rasterize(square, 64, 1.0)
