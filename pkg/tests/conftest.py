import numpy as np
import pytest

from cylflow.grid import build_grid


@pytest.fixture(scope="session")
def grid_small():
    return build_grid(1.0, 2.0, 9, 8, 17)


@pytest.fixture(scope="session")
def grid_medium():
    return build_grid(1.0, 2.0, 17, 16, 33)


def measured_order(errors):
    """log2 ratios of consecutive errors under 2x refinement."""
    return [float(np.log2(errors[i] / errors[i + 1])) for i in range(len(errors) - 1)]
