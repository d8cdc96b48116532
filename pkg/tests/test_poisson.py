import numpy as np
import pytest
import sympy as sp

from conftest import measured_order
from cylflow import operators as ops
from cylflow import poisson as ps
from cylflow.errors import IncompatibleData
from cylflow.fields import CapScalarField, MantleScalarField, ScalarField
from cylflow.grid import build_grid

L = 2.0


def _dirichlet_bc(grid, fn):
    return ps.BcSpec(
        ps.FaceBc(ps.DIRICHLET, CapScalarField.from_function(
            grid, lambda r, t: fn(r, t, 0.0) + 0 * r * t, "inflow")),
        ps.FaceBc(ps.DIRICHLET, CapScalarField.from_function(
            grid, lambda r, t: fn(r, t, grid.L) + 0 * r * t, "outflow")),
        ps.FaceBc(ps.DIRICHLET, MantleScalarField.from_function(
            grid, lambda t, z: fn(grid.R, t, z))),
    )


@pytest.fixture(scope="module")
def manufactured():
    """u* = r^2 cos(t) sin(pi z / L) and its symbolically derived Laplacian."""
    r, t, z = sp.symbols("r t z", positive=True)
    ustar = r**2 * sp.cos(t) * sp.sin(sp.pi * z / L)
    lap = sp.simplify(
        sp.diff(r * sp.diff(ustar, r), r) / r
        + sp.diff(ustar, t, 2) / r**2
        + sp.diff(ustar, z, 2)
    )
    return (
        sp.lambdify((r, t, z), ustar, "numpy"),
        sp.lambdify((r, t, z), lap, "numpy"),
        sp.lambdify((r, t, z), sp.diff(ustar, r), "numpy"),
    )


def test_harmonic_linear_function_is_exact(grid_medium):
    g = grid_medium
    bc = _dirichlet_bc(g, lambda r, t, z: z + 0 * r + 0 * t)
    rhs = ScalarField.zeros(g)
    u = ps.solve(rhs, bc)
    exact = ScalarField.from_function(g, lambda r, t, z: z + 0 * r + 0 * t)
    assert np.max(np.abs(u.values - exact.values)) <= 1e-9
    assert ps.residual(u, rhs, bc) <= 1e-10


def test_residual_contract(grid_medium):
    g = grid_medium
    rng = np.random.default_rng(4)
    rhs = ScalarField.from_function(
        g, lambda r, t, z: np.sin(z) * (1 + 0.5 * r * np.cos(t)) + 0.2
    )
    bc = _dirichlet_bc(g, lambda r, t, z: 0 * r + 0 * t + 0 * z)
    u = ps.solve(rhs, bc)
    assert ps.residual(u, rhs, bc) <= 1e-10 * (1.0 + ops.norm(rhs, "l2"))


def test_all_neumann_uniform_flux(grid_medium):
    g = grid_medium
    bc = ps.BcSpec(
        ps.FaceBc(ps.NEUMANN, CapScalarField.from_function(g, lambda r, t: -1.0 + 0 * r * t, "inflow")),
        ps.FaceBc(ps.NEUMANN, CapScalarField.from_function(g, lambda r, t: 1.0 + 0 * r * t, "outflow")),
        ps.FaceBc(ps.NEUMANN, MantleScalarField.zeros(g)),
    )
    u = ps.solve(ScalarField.zeros(g), bc, mean_zero=True)
    exact = ScalarField.from_function(g, lambda r, t, z: z - g.L / 2 + 0 * r + 0 * t)
    assert np.max(np.abs(u.values - exact.values)) <= 1e-9
    # gauge: quadrature mean is zero
    w = g.volume_weights()
    assert abs(np.sum(w * u.values)) <= 1e-10


def test_all_neumann_requires_gauge_request(grid_small):
    bc = ps.BcSpec(
        ps.FaceBc(ps.NEUMANN, None),
        ps.FaceBc(ps.NEUMANN, None),
        ps.FaceBc(ps.NEUMANN, None),
    )
    with pytest.raises(ValueError):
        ps.solve(ScalarField.zeros(grid_small), bc)


def test_all_neumann_flux_mismatch_rejected(grid_small):
    g = grid_small
    bc = ps.BcSpec(
        ps.FaceBc(ps.NEUMANN, CapScalarField.from_function(g, lambda r, t: -1.0 + 0 * r * t, "inflow")),
        ps.FaceBc(ps.NEUMANN, CapScalarField.from_function(g, lambda r, t: 2.0 + 0 * r * t, "outflow")),
        ps.FaceBc(ps.NEUMANN, MantleScalarField.zeros(g)),
    )
    with pytest.raises(IncompatibleData):
        ps.solve(ScalarField.zeros(g), bc, mean_zero=True)


def _solve_manufactured(n, manufactured):
    fu, flap, _ = manufactured
    g = build_grid(1.0, L, n + 1, 16, 2 * n + 1)
    rhs = ScalarField.from_function(g, lambda r, t, z: flap(np.maximum(r, 1e-300), t, z))
    u = ps.solve(rhs, _dirichlet_bc(g, fu))
    exact = ScalarField.from_function(g, lambda r, t, z: fu(r, t, z))
    return ops.rel_l2_error(u, exact)


def test_manufactured_solution_order(manufactured):
    errs = [_solve_manufactured(n, manufactured) for n in (8, 16, 32)]
    assert min(measured_order(errs)) >= 1.9, errs


def test_linearity(grid_small):
    g = grid_small
    rng = np.random.default_rng(8)
    rhs_a = ScalarField.from_function(g, lambda r, t, z: np.sin(z) + 0 * r + 0 * t)
    rhs_b = ScalarField.from_function(g, lambda r, t, z: r * np.cos(t) * z)
    bca = _dirichlet_bc(g, lambda r, t, z: r * np.cos(t) + 0 * z)
    bcb = _dirichlet_bc(g, lambda r, t, z: z**2 + 0 * r + 0 * t)
    alpha, beta = 1.7, -0.6
    rhs_c = ScalarField(g, alpha * rhs_a.values + beta * rhs_b.values)
    bcc = ps.BcSpec(
        *[
            ps.FaceBc(ps.DIRICHLET, type(fa.data)(
                g, alpha * fa.data.values + beta * fb.data.values,
                *(() if isinstance(fa.data, MantleScalarField) else (fa.data.cap,))))
            for fa, fb in zip(
                (bca.inflow, bca.outflow, bca.mantle),
                (bcb.inflow, bcb.outflow, bcb.mantle),
            )
        ]
    )
    ua = ps.solve(rhs_a, bca)
    ub = ps.solve(rhs_b, bcb)
    uc = ps.solve(rhs_c, bcc)
    combo = alpha * ua.values + beta * ub.values
    scale = np.max(np.abs(combo))
    assert np.max(np.abs(uc.values - combo)) <= 1e-9 * (1 + scale)


def test_discrete_maximum_principle(grid_small):
    g = grid_small
    bc = _dirichlet_bc(g, lambda r, t, z: np.cos(t) * np.exp(z / 2) + 0 * r)
    u = ps.solve(ScalarField.zeros(g), bc)
    data_min = min(
        bc.inflow.data.values.min(), bc.outflow.data.values.min(), bc.mantle.data.values.min()
    )
    data_max = max(
        bc.inflow.data.values.max(), bc.outflow.data.values.max(), bc.mantle.data.values.max()
    )
    assert u.values.min() >= data_min - 1e-9
    assert u.values.max() <= data_max + 1e-9


# -- edge compatibility ----------------------------------------------------


def test_compatibility_zero_data_passes(grid_small):
    bc = ps.BcSpec.dirichlet_everywhere(grid_small)
    report = ps.check_compatibility(ScalarField.zeros(grid_small), bc, level=0)
    assert report.ok
    for edge in report.edges.values():
        assert edge.cross_violation == 0.0


def test_compatibility_dirichlet_mismatch_fails(grid_small):
    g = grid_small
    bc = ps.BcSpec.dirichlet_everywhere(
        g, inflow=CapScalarField.from_function(g, lambda r, t: 1.0 + 0 * r * t, "inflow")
    )
    report = ps.check_compatibility(ScalarField.zeros(g), bc, level=0)
    assert not report.ok
    assert report.edges["minus"].cross_violation == pytest.approx(1.0)
    assert report.edges["plus"].cross_violation == 0.0


def test_compatibility_rhs_on_edge_condition_level_dependence(grid_small):
    # two Dirichlet faces meeting: the right-hand side must vanish on the
    # edge circle at the strictest level only; rhs = 2R - 3r is -R there
    g = grid_small
    bc = ps.BcSpec.dirichlet_everywhere(g)
    rhs = ScalarField.from_function(g, lambda r, t, z: 2 * g.R - 3 * r + 0 * t + 0 * z)
    strict = ps.check_compatibility(rhs, bc, level=1)
    assert not strict.ok
    assert strict.edges["minus"].rhs_violation == pytest.approx(g.R)
    relaxed = ps.check_compatibility(rhs, bc, level=0)
    assert relaxed.ok


def test_compatibility_neumann_neumann_cross_condition(grid_small):
    # both faces Neumann: the cross-derivative condition only activates at
    # the strictest level; radially sloped cap data violate it against the
    # flat mantle data
    g = grid_small
    bc = ps.BcSpec(
        ps.FaceBc(ps.NEUMANN, CapScalarField.from_function(g, lambda r, t: r**2 + 0 * t, "inflow")),
        ps.FaceBc(ps.NEUMANN, CapScalarField.zeros(g, "outflow")),
        ps.FaceBc(ps.NEUMANN, MantleScalarField.zeros(g)),
    )
    rhs = ScalarField.zeros(g)
    relaxed = ps.check_compatibility(rhs, bc, level=0)
    assert relaxed.ok
    strict = ps.check_compatibility(rhs, bc, level=1)
    assert not strict.ok
    assert strict.edges["minus"].cross_violation == pytest.approx(2 * g.R, rel=1e-6)


def test_compatibility_dirichlet_neumann_cross_condition(grid_small, manufactured):
    fu, flap, fdur = manufactured
    g = grid_small
    rhs = ScalarField.from_function(g, lambda r, t, z: flap(np.maximum(r, 1e-300), t, z))
    good = ps.BcSpec(
        ps.FaceBc(ps.DIRICHLET, CapScalarField.from_function(
            g, lambda r, t: fu(r, t, 0.0) + 0 * r * t, "inflow")),
        ps.FaceBc(ps.DIRICHLET, CapScalarField.from_function(
            g, lambda r, t: fu(r, t, g.L) + 0 * r * t, "outflow")),
        ps.FaceBc(ps.NEUMANN, MantleScalarField.from_function(
            g, lambda t, z: fdur(g.R, t, z))),
    )
    assert ps.check_compatibility(rhs, good, level=0).ok
    bad = ps.BcSpec(
        good.inflow,
        good.outflow,
        ps.FaceBc(ps.NEUMANN, MantleScalarField.from_function(
            g, lambda t, z: fdur(g.R, t, z) + 0.5)),
    )
    report = ps.check_compatibility(rhs, bad, level=0)
    assert not report.ok
    assert report.edges["minus"].cross_violation == pytest.approx(0.5, rel=1e-6)
