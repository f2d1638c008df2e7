import numpy as np
import pytest

from polyexp import Grid1D, SampledFunction1D, build_basis
from polyexp.basis import grid_tables


@pytest.fixture(scope="session")
def basis25():
    return build_basis(3.0, 25)


@pytest.fixture(scope="session")
def grid6001():
    return Grid1D(3.0, 6001)


@pytest.fixture(scope="session")
def tables6001(basis25, grid6001):
    """(order0, order1, order2) tables of shape (25, 6001)."""
    return grid_tables(basis25, grid6001)


@pytest.fixture()
def sin4x(grid6001):
    return SampledFunction1D(grid6001, np.sin(4 * grid6001.nodes()))
