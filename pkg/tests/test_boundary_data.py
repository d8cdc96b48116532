import numpy as np
import pytest

from cylflow.boundary_data import InflowData, make_f0, validate
from cylflow.errors import DegenerateInflow
from cylflow.fields import CapScalarField, VectorField


def uniform_axial(grid, w=1.0):
    return VectorField.from_components(grid, 0.0, 0.0, w)


def test_zero_data_gives_zero_f0(grid_medium):
    data = InflowData.zero(grid_medium)
    f0 = make_f0(data, uniform_axial(grid_medium), c_min=1.0)
    assert np.max(np.abs(f0.values)) == 0.0


def test_tangential_term_orientation(grid_medium):
    # v = e_z (so v.n = -1 on the cap), h = 0, g = x: grad_T g = e_x and
    # the induced vorticity is -(n x grad_T g)/(v.n) = -e_y, derived by
    # direct substitution; in cylindrical components -e_y at angle t is
    # (-sin t, -cos t, 0)
    g = grid_medium
    data = InflowData(
        g=CapScalarField.from_function(g, lambda r, t: r * np.cos(t)),
        h=CapScalarField.zeros(g),
    )
    f0 = make_f0(data, uniform_axial(g), c_min=1.0)
    st = np.sin(g.theta)[None, :]
    ct = np.cos(g.theta)[None, :]
    # interior of the cap only: the (admissibility-violating) edge ring
    # keeps its raw values, where the one-sided stencil is still exact here
    assert np.max(np.abs(f0.values[0] + st)) <= 1e-10
    assert np.max(np.abs(f0.values[1] + ct)) <= 1e-10
    assert np.max(np.abs(f0.values[2])) == 0.0


def test_normal_part_reproduces_h_exactly(grid_medium):
    g = grid_medium
    data = InflowData(
        g=CapScalarField.zeros(g),
        h=CapScalarField.from_function(g, lambda r, t: 0.3 * (1 - (r / g.R) ** 2) ** 2 + 0 * t),
    )
    f0 = make_f0(data, uniform_axial(g), c_min=1.0)
    # f0 . n = h with n = -e_z, i.e. the axial component is -h
    assert np.array_equal(f0.values[2][:-1], -data.h.values[:-1])
    assert np.max(np.abs(f0.values[:2])) == 0.0
    # edge ring was projected to exactly zero (data vanish there)
    assert np.max(np.abs(f0.values[:, -1, :])) == 0.0


def test_swirling_inflow_couples_h_and_velocity(grid_medium):
    # nonzero tangential velocity mixes h into the tangential part:
    # f0_T = (h / v.n) v_T with v.n = -v_z
    g = grid_medium
    V = 0.25
    v = VectorField.from_components(g, 0.0, V, 2.0)
    data = InflowData(
        g=CapScalarField.zeros(g),
        h=CapScalarField.from_function(g, lambda r, t: 1.0 + 0 * r + 0 * t),
    )
    f0 = make_f0(data, v, c_min=2.0)
    inner = slice(0, -1)
    assert np.max(np.abs(f0.values[1][inner] + V / 2.0)) <= 1e-12
    assert np.max(np.abs(f0.values[2][inner] + 1.0)) <= 1e-12


def test_linearity_in_data(grid_medium):
    g = grid_medium
    rng = np.random.default_rng(12)
    ones = np.ones((g.n_r, g.n_theta))
    base = (1 - (g.r[:, None] / g.R) ** 2) ** 2 * ones
    d1 = InflowData(
        g=CapScalarField(g, base * rng.standard_normal()),
        h=CapScalarField(g, base * rng.standard_normal()),
    )
    d2 = InflowData(
        g=CapScalarField(g, base * np.cos(g.theta)[None, :] * (g.r[:, None] / g.R)),
        h=CapScalarField(g, base * 0.5),
    )
    v = VectorField.from_components(g, 0.0, 0.1, 1.0)
    a, b = 0.7, -1.3
    combo = InflowData(
        g=CapScalarField(g, a * d1.g.values + b * d2.g.values),
        h=CapScalarField(g, a * d1.h.values + b * d2.h.values),
    )
    f_combo = make_f0(combo, v, c_min=1.0)
    f_lin = a * make_f0(d1, v, c_min=1.0).values + b * make_f0(d2, v, c_min=1.0).values
    assert np.max(np.abs(f_combo.values - f_lin)) <= 1e-12


def test_degenerate_inflow_rejected(grid_small):
    data = InflowData.zero(grid_small)
    weak = VectorField.from_components(grid_small, 0.0, 0.0, 0.3)
    with pytest.raises(DegenerateInflow):
        make_f0(data, weak, c_min=1.0)  # v_z = 0.3 < c_min/2


def test_validate_zero_data(grid_small):
    report = validate(InflowData.zero(grid_small))
    assert report.edge_ok
    assert report.data_size == 0.0
    assert report.within_bound


def test_validate_flags_nonvanishing_edge(grid_small):
    data = InflowData(
        g=CapScalarField.zeros(grid_small),
        h=CapScalarField.from_function(grid_small, lambda r, t: 1.0 + 0 * r + 0 * t),
    )
    report = validate(data)
    assert not report.edge_ok
    assert report.edge_violation == pytest.approx(1.0)


def test_data_size_scales_linearly(grid_medium):
    g = grid_medium
    sizes = []
    for eps in (0.01, 0.02, 0.04):
        data = InflowData(
            g=CapScalarField.zeros(g),
            h=CapScalarField.from_function(
                g, lambda r, t: eps * (1 - (r / g.R) ** 2) ** 2 + 0 * t
            ),
        )
        report = validate(data)
        assert report.edge_ok
        sizes.append(report.data_size)
    assert sizes[1] == pytest.approx(2 * sizes[0], rel=1e-12)
    assert sizes[2] == pytest.approx(4 * sizes[0], rel=1e-12)


def test_size_bound_warning_flag(grid_small):
    data = InflowData(
        g=CapScalarField.zeros(grid_small),
        h=CapScalarField.from_function(
            grid_small, lambda r, t: (1 - (r / grid_small.R) ** 2) ** 2 + 0 * t
        ),
    )
    report = validate(data, size_bound=1e-6)
    assert not report.within_bound
    assert report.messages
