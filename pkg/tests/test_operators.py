import numpy as np
import pytest
import sympy as sp

from conftest import measured_order
from cylflow import operators as ops
from cylflow.fields import ScalarField, VectorField
from cylflow.grid import build_grid


def _sym_cyl():
    return sp.symbols("r t z", positive=True)


def sym_curl(fr, ft, fz, r, t, z):
    return (
        sp.diff(fz, t) / r - sp.diff(ft, z),
        sp.diff(fr, z) - sp.diff(fz, r),
        sp.diff(r * ft, r) / r - sp.diff(fr, t) / r,
    )


def sym_div(fr, ft, fz, r, t, z):
    return sp.diff(r * fr, r) / r + sp.diff(ft, t) / r + sp.diff(fz, z)


def test_grad_of_axial_coordinate_is_unit(grid_medium):
    s = ScalarField.from_function(grid_medium, lambda r, t, z: z + 0 * r + 0 * t)
    gv = ops.grad(s).values
    assert np.max(np.abs(gv[0])) == 0.0
    assert np.max(np.abs(gv[1])) == 0.0
    assert np.max(np.abs(gv[2] - 1.0)) <= 1e-13


def test_grad_of_cartesian_x_is_e_x(grid_medium):
    s = ScalarField.from_function(grid_medium, lambda r, t, z: r * np.cos(t) + 0 * z)
    gv = ops.grad(s).values
    ct = np.cos(grid_medium.theta)[None, :, None]
    st = np.sin(grid_medium.theta)[None, :, None]
    assert np.max(np.abs(gv[0] - ct)) <= 1e-12
    assert np.max(np.abs(gv[1] + st)) <= 1e-12


def test_curl_of_swirl_profile_matches_symbolic_oracle(grid_medium):
    # derive the expected curl symbolically before asserting
    r, t, z = _sym_cyl()
    R = sp.Float(grid_medium.R)
    cr, ct_, cz = sym_curl(sp.Integer(0), r * (R - r), sp.Integer(0), r, t, z)
    assert sp.simplify(cr) == 0 and sp.simplify(ct_) == 0
    assert sp.simplify(cz - (2 * R - 3 * r)) == 0

    F = VectorField.from_function(
        grid_medium, lambda rr, tt, zz: (0 * rr, rr * (grid_medium.R - rr) + 0 * tt + 0 * zz, 0 * rr)
    )
    cv = ops.curl(F).values
    expected = (2 * grid_medium.R - 3 * grid_medium.r)[:, None, None]
    # exact away from the axis; the profile r(R-r) has an |r|-type kink at
    # the axis, where the stencil is first-order on it
    assert np.max(np.abs(cv[2][1:] - expected[1:])) <= 1e-11
    assert np.max(np.abs(cv[2][0] - expected[0])) <= 3 * grid_medium.dr
    assert np.max(np.abs(cv[0])) <= 1e-11
    assert np.max(np.abs(cv[1])) <= 1e-11


def test_div_of_curl_vanishes_for_smooth_fields(grid_medium):
    g = grid_medium
    F = VectorField.from_function(
        g,
        lambda r, t, z: (
            r * (g.R - r) * np.cos(t) * np.sin(z),
            r * (g.R - r) * np.sin(t + 1.0) + 0 * z,
            np.cos(np.pi * z / g.L) * (1 + 0.5 * r * np.cos(t)),
        ),
    )
    h2 = max(g.dr, g.dz) ** 2
    assert ops.norm(ops.div(ops.curl(F)), "l2") <= 5 * h2


def test_curl_of_grad_vanishes(grid_medium):
    s = ScalarField.from_function(
        grid_medium, lambda r, t, z: np.exp(0.4 * r * np.cos(t)) * np.sin(z)
    )
    h2 = max(grid_medium.dr, grid_medium.dz) ** 2
    assert ops.norm(ops.curl(ops.grad(s)), "l2") <= 5 * h2


def _field_error(n, which):
    g = build_grid(1.0, 2.0, n + 1, 16, 2 * n + 1)
    s_fn = lambda r, t, z: np.exp(0.5 * r * np.cos(t)) * np.sin(np.pi * z / g.L)
    if which == "grad":
        r, t, z = _sym_cyl()
        expr = sp.exp(0.5 * r * sp.cos(t)) * sp.sin(sp.pi * z / 2)
        ex = [sp.diff(expr, r), sp.diff(expr, t) / r, sp.diff(expr, z)]
        fns = [sp.lambdify((r, t, z), e, "numpy") for e in ex]
        got = ops.grad(ScalarField.from_function(g, s_fn))
        exact = VectorField.from_function(
            g, lambda rr, tt, zz: tuple(f(np.maximum(rr, 1e-300), tt, zz) for f in fns)
        )
        return ops.norm(VectorField(g, got.values - exact.values), "l2")
    comps = (
        lambda r, t, z: r * (1 - r) * np.cos(t) * np.sin(z),
        lambda r, t, z: r * (1 - r) ** 2 * np.sin(t) + 0 * z,
        lambda r, t, z: np.sin(np.pi * z / 2) * (1 + 0.5 * r * np.cos(t)),
    )
    r, t, z = _sym_cyl()
    sym_comps = (
        r * (1 - r) * sp.cos(t) * sp.sin(z),
        r * (1 - r) ** 2 * sp.sin(t),
        sp.sin(sp.pi * z / 2) * (1 + 0.5 * r * sp.cos(t)),
    )
    F = VectorField.from_function(g, lambda rr, tt, zz: tuple(c(rr, tt, zz) for c in comps))
    if which == "div":
        expr = sym_div(*sym_comps, r, t, z)
        fn = sp.lambdify((r, t, z), sp.simplify(expr), "numpy")
        got = ops.div(F)
        exact = ScalarField.from_function(g, lambda rr, tt, zz: fn(np.maximum(rr, 1e-300), tt, zz))
        return ops.norm(ScalarField(g, got.values - exact.values), "l2")
    exprs = sym_curl(*sym_comps, r, t, z)
    fns = [sp.lambdify((r, t, z), sp.simplify(e), "numpy") for e in exprs]
    got = ops.curl(F)
    exact = VectorField.from_function(
        g, lambda rr, tt, zz: tuple(f(np.maximum(rr, 1e-300), tt, zz) for f in fns)
    )
    return ops.norm(VectorField(g, got.values - exact.values), "l2")


@pytest.mark.parametrize("which", ["grad", "div", "curl"])
def test_operator_order_at_least_19(which):
    errs = [_field_error(n, which) for n in (8, 16, 32)]
    orders = measured_order(errs)
    assert min(orders) >= 1.9, (which, errs, orders)


def test_l2_of_axial_coordinate_matches_integral():
    # exact integral of z^2 over the cylinder is pi R^2 L^3 / 3
    errs = []
    for n in (8, 16, 32):
        g = build_grid(1.0, 1.0, n + 1, 8, n + 1)
        s = ScalarField.from_function(g, lambda r, t, z: z + 0 * r + 0 * t)
        errs.append(abs(ops.norm(s, "l2") ** 2 - np.pi / 3))
    assert errs[0] <= 0.05
    assert min(measured_order(errs)) >= 1.9


def test_l2_of_unit_field_on_unit_volume_domain():
    R = np.sqrt(1.0 / (np.pi * 2.0))  # pi R^2 L = 1 with L = 2
    g = build_grid(R, 2.0, 9, 8, 17)
    one = ScalarField.from_function(g, lambda r, t, z: 1.0 + 0 * r + 0 * t + 0 * z)
    assert abs(ops.norm(one, "l2") - 1.0) <= 1e-10


def test_zero_field_has_zero_norms(grid_small):
    z = ScalarField.zeros(grid_small)
    for kind in ("l2", "h1", "linf"):
        assert ops.norm(z, kind) == 0.0


def test_norm_homogeneity_and_determinism(grid_small):
    rng = np.random.default_rng(11)
    F = VectorField(grid_small, rng.standard_normal((3, *grid_small.shape)))
    for kind in ("l2", "h1", "linf"):
        n1 = ops.norm(F, kind)
        alpha = 3.7
        n2 = ops.norm(VectorField(grid_small, alpha * F.values), kind)
        assert abs(n2 - alpha * n1) <= 1e-13 * n2
        assert ops.norm(F, kind) == n1  # bitwise repeatable
