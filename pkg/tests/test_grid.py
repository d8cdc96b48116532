import numpy as np
import pytest

from cylflow.errors import InvalidGrid
from cylflow.grid import (
    EDGE_MINUS,
    EDGE_PLUS,
    INFLOW,
    INTERIOR,
    MANTLE,
    OUTFLOW,
    build_grid,
)


def test_build_grid_tags_inflow():
    g = build_grid(1.0, 2.0, 8, 8, 16)
    assert g.n_nodes == 8 * 8 * 16
    inflow = g.tags == INFLOW
    # inflow = z = 0, r < R
    assert inflow[:-1, :, 0].all()
    assert not inflow[-1, :, 0].any()
    assert not inflow[:, :, 1:].any()


def test_build_grid_rejects_odd_n_theta():
    with pytest.raises(InvalidGrid):
        build_grid(1.0, 2.0, 8, 7, 16)


@pytest.mark.parametrize(
    "args",
    [
        (0.0, 2.0, 8, 8, 16),
        (1.0, -1.0, 8, 8, 16),
        (1.0, 2.0, 3, 8, 16),
        (1.0, 2.0, 8, 2, 16),
        (1.0, 2.0, 8, 8, 3),
    ],
)
def test_build_grid_rejects_bad_parameters(args):
    with pytest.raises(InvalidGrid):
        build_grid(*args)


def test_edge_minus_nodes():
    g = build_grid(1.0, 1.0, 4, 4, 4)
    edge = np.argwhere(g.tags == EDGE_MINUS)
    assert len(edge) == g.n_theta
    assert (edge[:, 0] == g.n_r - 1).all()
    assert (edge[:, 2] == 0).all()


def test_every_node_has_exactly_one_tag():
    g = build_grid(1.0, 2.0, 9, 8, 17)
    counts = {tag: int(np.sum(g.tags == tag)) for tag in
              (INTERIOR, INFLOW, OUTFLOW, MANTLE, EDGE_MINUS, EDGE_PLUS)}
    assert sum(counts.values()) == g.n_nodes
    assert counts[EDGE_MINUS] == counts[EDGE_PLUS] == g.n_theta
    assert counts[INFLOW] == counts[OUTFLOW] == (g.n_r - 1) * g.n_theta
    assert counts[MANTLE] == g.n_theta * (g.n_z - 2)


def test_quadrature_weights_measure_the_cylinder():
    g = build_grid(1.0, 2.0, 33, 16, 33)
    vol = float(np.sum(g.volume_weights()))
    assert vol == pytest.approx(np.pi * g.R**2 * g.L, rel=1e-12)
    area = float(np.sum(g.cap_weights()))
    assert area == pytest.approx(np.pi * g.R**2, rel=1e-12)
    mantle = float(np.sum(g.mantle_weights()))
    assert mantle == pytest.approx(2 * np.pi * g.R * g.L, rel=1e-12)


def test_axis_flag():
    g = build_grid(1.0, 2.0, 9, 8, 17)
    assert g.axis_mask[0].all()
    assert not g.axis_mask[1:].any()
