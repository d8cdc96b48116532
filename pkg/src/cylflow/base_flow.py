"""Irrotational base solution (v0, p0) from cap flux data.

The potential psi solves the all-Neumann problem

    Laplace(psi) = 0  in the cylinder,     d(psi)/dn = phi  on the boundary,

with phi < 0 on the inflow cap, phi > 0 on the outflow cap and phi = 0
on the mantle.  Then v0 = grad(psi) and p0 = -|v0|^2 / 2 satisfy the
steady Euler equations exactly (the pressure constant is fixed to
zero).  Under the sign hypothesis the axial velocity d(psi)/dz is
bounded below by the smaller cap-flux magnitude -- a maximum-principle
fact that the assembled BaseFlow records as c_min and enforces at
runtime, because every downstream streamline argument needs it.

Admissible flux data must balance (total inflow = total outflow) and
be edge-compatible: the radial derivative of phi must vanish on the
edge circles, matching the mantle's zero flux.  Balance failures raise
IncompatibleData; edge incompatibility only warns (the solve proceeds
with reduced accuracy near the edges).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import operators as ops
from . import poisson
from .boundary_data import edge_condition_tolerance
from .errors import CompatibilityWarning, IncompatibleData, StagnationDetected
from .fields import CapScalarField, MantleScalarField, ScalarField, VectorField
from .grid import CylGrid


@dataclass(eq=False)
class FluxData:
    """Normal-velocity data phi on the two caps (mantle flux is zero)."""

    phi_minus: CapScalarField  # on the inflow cap, phi < 0
    phi_plus: CapScalarField   # on the outflow cap, phi > 0

    def __post_init__(self):
        if self.phi_minus.cap != "inflow" or self.phi_plus.cap != "outflow":
            raise ValueError("phi_minus must live on the inflow cap, phi_plus on the outflow cap")
        if not self.phi_minus.grid.same_as(self.phi_plus.grid):
            raise IncompatibleData("flux caps live on different grids")

    @property
    def grid(self) -> CylGrid:
        return self.phi_minus.grid

    @classmethod
    def uniform(cls, grid: CylGrid, magnitude: float = 1.0) -> "FluxData":
        shape = (grid.n_r, grid.n_theta)
        return cls(
            CapScalarField(grid, np.full(shape, -magnitude), "inflow"),
            CapScalarField(grid, np.full(shape, magnitude), "outflow"),
        )

    def balance_defect(self) -> float:
        w = self.grid.cap_weights()
        return float(np.sum(w * self.phi_minus.values) + np.sum(w * self.phi_plus.values))

    def sign_margin(self) -> float:
        """c with phi_plus >= c and phi_minus <= -c; must be positive."""
        return float(min(np.min(self.phi_plus.values), np.min(-self.phi_minus.values)))

    def edge_flatness(self) -> float:
        """max |d(phi)/dr| on the two edge circles."""
        worst = 0.0
        for cap in (self.phi_minus, self.phi_plus):
            v = cap.values
            d = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * self.grid.dr)
            worst = max(worst, float(np.max(np.abs(d))))
        return worst


@dataclass(eq=False)
class BaseFlow:
    psi: ScalarField
    v0: VectorField
    p0: ScalarField
    c_min: float

    @property
    def grid(self) -> CylGrid:
        return self.psi.grid


def solve_potential(flux: FluxData) -> ScalarField:
    """Mean-zero potential of the irrotational flow carrying the flux.

    Raises IncompatibleData when the flux does not balance or has the
    wrong sign; warns (CompatibilityWarning) when the edge-flatness
    condition d(phi)/dr = 0 on the edge circles is violated.
    """
    grid = flux.grid
    defect = flux.balance_defect()
    scale = 1.0 + float(np.max(np.abs(flux.phi_plus.values))) * np.pi * grid.R**2
    if abs(defect) > 1e-8 * scale:
        raise IncompatibleData(
            f"cap fluxes do not balance: net flux {defect:.3e} (tolerance {1e-8 * scale:.1e})"
        )
    margin = flux.sign_margin()
    if margin <= 0.0:
        raise IncompatibleData(
            f"flux sign hypothesis violated: need phi > 0 on the outflow cap and "
            f"phi < 0 on the inflow cap, margin {margin:.3e}"
        )
    flat = flux.edge_flatness()
    if flat > edge_condition_tolerance(grid) * (1.0 + float(np.max(np.abs(flux.phi_plus.values)))):
        warnings.warn(
            f"flux is not edge-flat (max |dphi/dr| = {flat:.3e} on the edge circles); "
            "potential accuracy degrades near the edges",
            CompatibilityWarning,
            stacklevel=2,
        )
    bc = poisson.BcSpec(
        poisson.FaceBc(poisson.NEUMANN, flux.phi_minus),
        poisson.FaceBc(poisson.NEUMANN, flux.phi_plus),
        poisson.FaceBc(poisson.NEUMANN, MantleScalarField.zeros(grid)),
    )
    return poisson.solve(ScalarField.zeros(grid), bc, mean_zero=True)


def assemble_base(psi: ScalarField) -> BaseFlow:
    """Velocity, pressure and axial floor of the potential flow.

    Raises StagnationDetected if the axial velocity is not strictly
    positive somewhere (the streamline machinery would break down).
    """
    v0 = ops.grad(psi)
    p0 = ScalarField(psi.grid, -0.5 * np.sum(v0.values**2, axis=0))
    c_min = float(np.min(v0.values[2]))
    if c_min <= 0.0:
        raise StagnationDetected(
            f"base flow has min axial velocity {c_min:.3e} <= 0; "
            "streamlines would stagnate or recirculate"
        )
    return BaseFlow(psi=psi, v0=v0, p0=p0, c_min=c_min)


def build_base_flow(flux: FluxData) -> BaseFlow:
    return assemble_base(solve_potential(flux))
