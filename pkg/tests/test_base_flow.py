import numpy as np
import pytest

from conftest import measured_order
from cylflow import operators as ops
from cylflow import poisson
from cylflow.base_flow import FluxData, assemble_base, build_base_flow, solve_potential
from cylflow.errors import CompatibilityWarning, IncompatibleData, StagnationDetected
from cylflow.fields import CapScalarField, MantleScalarField, ScalarField
from cylflow.grid import build_grid
from cylflow.solver import euler_residual


def radial_flux(grid, beta=1.0, magnitude=1.0):
    """Edge-flat radial flux profile; balanced by cap symmetry."""
    prof = lambda r, t: magnitude * (1.0 + 0.1 * beta * (1 - (r / grid.R) ** 2) ** 2) + 0 * t
    return FluxData(
        CapScalarField.from_function(grid, lambda r, t: -prof(r, t), "inflow"),
        CapScalarField.from_function(grid, prof, "outflow"),
    )


def test_uniform_flux_gives_translation_flow(grid_medium):
    g = grid_medium
    psi = solve_potential(FluxData.uniform(g))
    expected = ScalarField.from_function(g, lambda r, t, z: z - g.L / 2 + 0 * r + 0 * t)
    assert np.max(np.abs(psi.values - expected.values)) <= 1e-9
    base = assemble_base(psi)
    assert np.max(np.abs(base.v0.values[2] - 1.0)) <= 1e-12
    assert np.max(np.abs(base.v0.values[:2])) <= 1e-12
    assert np.max(np.abs(base.p0.values + 0.5)) <= 1e-12
    assert base.c_min == pytest.approx(1.0, abs=1e-12)


def test_radial_flux_triggers_edge_warning_but_solves(grid_medium):
    g = grid_medium
    # the paraboloid profile (1 - (r/R)^2) is not edge-flat; the solve
    # must proceed under a CompatibilityWarning
    prof = lambda r, t: 1.0 + 0.1 * (1 - (r / g.R) ** 2) + 0 * t
    flux = FluxData(
        CapScalarField.from_function(g, lambda r, t: -prof(r, t), "inflow"),
        CapScalarField.from_function(g, prof, "outflow"),
    )
    with pytest.warns(CompatibilityWarning):
        psi = solve_potential(flux)
    bc = poisson.BcSpec(
        poisson.FaceBc(poisson.NEUMANN, flux.phi_minus),
        poisson.FaceBc(poisson.NEUMANN, flux.phi_plus),
        poisson.FaceBc(poisson.NEUMANN, MantleScalarField.zeros(g)),
    )
    assert poisson.residual(psi, ScalarField.zeros(g), bc) <= 1e-10


def test_edge_flat_radial_flux_solves_cleanly(grid_medium):
    import warnings

    g = grid_medium
    with warnings.catch_warnings():
        warnings.simplefilter("error", CompatibilityWarning)
        base = build_base_flow(radial_flux(g))
    # maximum principle: the axial floor cannot undercut the smaller cap flux
    assert base.c_min >= 1.0 - 5 * max(g.dr, g.dz) ** 2
    # and the minimum is attained on the caps, not in the interior
    interior_min = float(np.min(base.v0.values[2, :, :, 1:-1]))
    cap_min = float(np.min(base.v0.values[2, :, :, [0, -1]]))
    assert interior_min >= cap_min - 1e-9


def test_base_flow_is_discrete_euler_solution(grid_medium):
    base = build_base_flow(radial_flux(grid_medium))
    res = euler_residual(base.v0, base.p0, radial_flux(grid_medium))
    h2 = max(grid_medium.dr, grid_medium.dz) ** 2
    assert res["momentum"] <= 10 * h2
    assert res["div"] <= 10 * h2
    assert res["flux_mismatch"] <= 10 * h2
    assert ops.norm(ops.curl(base.v0), "l2") <= 10 * h2


def swirl_free_flux_3d(grid, beta=0.5):
    """Edge-flat, theta-dependent, balanced flux with positive margin."""

    def prof(r, t):
        rho = r / grid.R
        return 1.0 + 0.1 * beta * (1 - rho**2) ** 2 * (1.0 + 0.8 * rho * np.cos(t))

    return FluxData(
        CapScalarField.from_function(grid, lambda r, t: -prof(r, t), "inflow"),
        CapScalarField.from_function(grid, prof, "outflow"),
    )


def test_axisymmetric_potential_flow_is_discretely_curl_free(grid_medium):
    # for axisymmetric potentials the mixed-difference stencils commute
    # exactly, so curl(grad psi) vanishes to roundoff, not just O(h^2)
    base = build_base_flow(radial_flux(grid_medium))
    assert ops.norm(ops.curl(base.v0), "l2") <= 1e-12


def test_curl_v0_order_under_refinement():
    errs = []
    for n in (8, 16, 32):
        g = build_grid(1.0, 2.0, n + 1, 8, 2 * n + 1)
        base = build_base_flow(swirl_free_flux_3d(g))
        errs.append(ops.norm(ops.curl(base.v0), "l2"))
    assert min(measured_order(errs)) >= 1.9, errs


def test_flux_imbalance_rejected(grid_small):
    g = grid_small
    flux = FluxData(
        CapScalarField.from_function(g, lambda r, t: -1.0 + 0 * r * t, "inflow"),
        CapScalarField.from_function(g, lambda r, t: 2.0 + 0 * r * t, "outflow"),
    )
    with pytest.raises(IncompatibleData):
        solve_potential(flux)


def test_flux_sign_hypothesis_rejected(grid_small):
    g = grid_small
    # balanced but with the outflow flux dipping to zero at the axis
    prof = lambda r, t: (r / g.R) ** 2 + 0 * t
    flux = FluxData(
        CapScalarField.from_function(g, lambda r, t: -prof(r, t), "inflow"),
        CapScalarField.from_function(g, prof, "outflow"),
    )
    with pytest.raises(IncompatibleData):
        solve_potential(flux)


def test_stagnation_detected_in_assembly(grid_small):
    psi = ScalarField.from_function(grid_small, lambda r, t, z: -z + 0 * r + 0 * t)
    with pytest.raises(StagnationDetected):
        assemble_base(psi)
