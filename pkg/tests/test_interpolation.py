import numpy as np
import pytest

from cylflow import interpolation as itp
from cylflow.errors import OutOfDomain
from cylflow.fields import ScalarField, VectorField
from cylflow.interpolation import interpolate


def _random_points(grid, n, rng, r_max=None):
    return np.stack(
        [
            rng.uniform(0.0, r_max if r_max is not None else grid.R, n),
            rng.uniform(0.0, 2 * np.pi, n),
            rng.uniform(0.0, grid.L, n),
        ],
        axis=1,
    )


def test_linear_fields_interpolate_exactly(grid_medium):
    rng = np.random.default_rng(5)
    pts = _random_points(grid_medium, 200, rng)
    # a generic linear Cartesian field a + b.x
    s = ScalarField.from_function(
        grid_medium,
        lambda r, t, z: 0.7 + 1.3 * r * np.cos(t) - 0.4 * r * np.sin(t) + 2.1 * z,
    )
    got = interpolate(s, pts)
    x = pts[:, 0] * np.cos(pts[:, 1])
    y = pts[:, 0] * np.sin(pts[:, 1])
    exact = 0.7 + 1.3 * x - 0.4 * y + 2.1 * pts[:, 2]
    assert np.max(np.abs(got - exact)) <= 1e-12


def test_single_point_and_vector_output(grid_medium):
    F = VectorField.from_components(grid_medium, 0.0, 0.0, 1.0)
    out = interpolate(F, (0.3, 1.0, 0.7))
    assert out.shape == (3,)
    assert np.allclose(out, [0.0, 0.0, 1.0], atol=1e-12)


def test_vector_interpolation_rotates_with_query_angle(grid_medium):
    # constant Cartesian e_x: cylindrical components at angle t are (cos t, -sin t)
    F = VectorField.from_components(grid_medium, 1.0, 0.0, 0.0, frame="cartesian").to_cylindrical()
    th = np.array([0.3, 2.0, 4.4])
    pts = np.stack([np.full(3, 0.5), th, np.full(3, 1.0)], axis=1)
    out = interpolate(F, pts)
    assert np.allclose(out[:, 0], np.cos(th), atol=1e-12)
    assert np.allclose(out[:, 1], -np.sin(th), atol=1e-12)


def test_boundary_clamp_rule(grid_medium):
    s = ScalarField.from_function(grid_medium, lambda r, t, z: r**2 + 0 * t + 0 * z)
    R = grid_medium.R
    on_wall = interpolate(s, (R + 1e-10 * R, 0.0, 1.0))
    assert on_wall == pytest.approx(R**2, abs=1e-9)
    with pytest.raises(OutOfDomain):
        interpolate(s, (2 * R, 0.0, 1.0))
    with pytest.raises(OutOfDomain):
        interpolate(s, (0.5, 0.0, grid_medium.L + 1.0))


def test_interpolation_accuracy_on_smooth_field(grid_medium):
    g = grid_medium
    fn = lambda r, t, z: np.exp(0.5 * r * np.cos(t)) * np.sin(np.pi * z / g.L)
    s = ScalarField.from_function(g, fn)
    rng = np.random.default_rng(9)
    pts = _random_points(g, 300, rng)
    got = interpolate(s, pts)
    exact = fn(pts[:, 0], pts[:, 1], pts[:, 2])
    # cubic in (r, z): error O(h^4)
    assert np.max(np.abs(got - exact)) <= 10 * max(g.dr, g.dz) ** 4


def test_fast_batch_agrees_with_spectral_sampler(grid_medium):
    g = grid_medium
    fn = lambda r, t, z: np.cos(2 * t) * r**2 * (1 + z)
    s = ScalarField.from_function(g, fn)
    rng = np.random.default_rng(2)
    pts = _random_points(g, 400, rng)
    exact = interpolate(s, pts)
    geom = itp.FastGeometry(g, upsample=8)
    batch = itp.FastFieldBatch(geom, [s.values], [1.0])
    fast = batch.sample(pts)[:, 0]
    # refined-theta cubic error for an m = 2 mode sits at the 5e-6 level
    assert np.max(np.abs(fast - exact)) <= 2e-5 * (1 + np.max(np.abs(exact)))


def test_axis_crossing_continuity(grid_medium):
    # sampling just off the axis must agree with the axis value of a smooth field
    fn = lambda r, t, z: 2.0 + r * np.cos(t) + 0 * z
    s = ScalarField.from_function(grid_medium, fn)
    eps = 1e-7
    vals = interpolate(
        s, np.array([[eps, 0.0, 1.0], [eps, np.pi, 1.0], [0.0, 0.0, 1.0]])
    )
    assert np.allclose(vals, [2.0 + eps, 2.0 - eps, 2.0], atol=1e-10)
