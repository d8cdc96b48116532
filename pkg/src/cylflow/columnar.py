"""Closed-form columnar swirl solution used as an independent oracle.

A columnar flow

    v = (0, V(r), W),      W = 1,
    V(r) = amplitude * c_norm * r (R - r)^2,   c_norm = 27 / (4 R^3),

(c_norm normalizes the peak swirl speed to `amplitude`) satisfies the
steady Euler equations exactly with the radial pressure balance
p'(r) = V(r)^2 / r, and its vorticity

    curl v = (0, 0, omega(r)),   omega = (rV)'/r = 2 c (R - r)(R - 2r) * amplitude

is transported invariantly: (v.grad)(curl v) = ((curl v).grad) v holds
identically for columnar fields.  Both V and omega vanish together with
their radial slopes at r = R, so the inflow data derived from this flow
meet the edge-vanishing conditions of the transport/reconstruction
chain.

The inflow data reproducing this solution through the solver are

    h  = n . curl v |_{z=0} = -omega(r)            (n = -e_z)
    g  = |v|^2/2 + p - |v0|^2/2 - p0 = V^2/2 + p_swirl(r)

against the uniform base flow v0 = e_z, p0 = -1/2 (caps flux -/+ 1),
where p_swirl(r) = integral_0^r V(s)^2 / s ds has the closed form used
below and the pressure gauge is fixed by p(0) = -1/2 so the zero-swirl
limit reduces to the base flow.  Streamlines are helices: closed-form
foot points, transit times and arclengths are provided for testing the
tracer against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base_flow import BaseFlow, FluxData, build_base_flow
from .boundary_data import InflowData
from .fields import CapScalarField, ScalarField, VectorField
from .grid import CylGrid


@dataclass(frozen=True)
class ColumnarOracle:
    R: float
    L: float
    amplitude: float
    axial: float = 1.0

    @property
    def c_norm(self) -> float:
        return 27.0 / (4.0 * self.R**3)

    # -- radial profiles ------------------------------------------------

    def swirl(self, r):
        return self.amplitude * self.c_norm * r * (self.R - r) ** 2

    def vorticity_z(self, r):
        return 2.0 * self.amplitude * self.c_norm * (self.R - r) * (self.R - 2.0 * r)

    def pressure(self, r):
        """p(r) = integral_0^r V^2/s ds - 1/2 (axial gauge p(0) = -W^2/2)."""
        a2 = (self.amplitude * self.c_norm) ** 2
        R = self.R
        swirl_head = a2 * (
            R**4 * r**2 / 2.0
            - 4.0 * R**3 * r**3 / 3.0
            + 1.5 * R**2 * r**4
            - 0.8 * R * r**5
            + r**6 / 6.0
        )
        return swirl_head - 0.5 * self.axial**2

    def bernoulli_head(self, r):
        return 0.5 * (self.swirl(r) ** 2 + self.axial**2) + self.pressure(r)

    # -- grid fields ----------------------------------------------------

    def velocity(self, grid: CylGrid) -> VectorField:
        return VectorField.from_function(
            grid, lambda r, t, z: (0.0 * r, self.swirl(r) + 0 * t + 0 * z, self.axial + 0 * r)
        )

    def vorticity(self, grid: CylGrid) -> VectorField:
        return VectorField.from_function(
            grid, lambda r, t, z: (0.0 * r, 0.0 * r + 0 * t + 0 * z, self.vorticity_z(r))
        )

    def pressure_field(self, grid: CylGrid) -> ScalarField:
        return ScalarField.from_function(grid, lambda r, t, z: self.pressure(r) + 0 * t + 0 * z)

    def perturbation(self, grid: CylGrid) -> VectorField:
        """v - v0: the rotational part the fixed point must reproduce."""
        return VectorField.from_function(
            grid, lambda r, t, z: (0.0 * r, self.swirl(r) + 0 * t + 0 * z, 0.0 * r)
        )

    # -- solver inputs --------------------------------------------------

    def flux(self, grid: CylGrid) -> FluxData:
        return FluxData.uniform(grid, self.axial)

    def base_flow(self, grid: CylGrid) -> BaseFlow:
        return build_base_flow(self.flux(grid))

    def inflow_data(self, grid: CylGrid) -> InflowData:
        g = CapScalarField.from_function(
            grid, lambda r, t: 0.5 * self.swirl(r) ** 2 + self.pressure(r) + 0.5 * self.axial**2 + 0 * t
        )
        h = CapScalarField.from_function(grid, lambda r, t: -self.vorticity_z(r) + 0 * t)
        return InflowData(g=g, h=h)

    # -- closed-form characteristics -------------------------------------

    def angular_speed(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r > 0, self.swirl(r) / np.where(r > 0, r, 1.0), 0.0)

    def transit_time(self, z0: float) -> float:
        return z0 / self.axial

    def helix_length(self, r0: float, z0: float) -> float:
        return (z0 / self.axial) * np.sqrt(self.swirl(r0) ** 2 + self.axial**2)

    def foot_point(self, r0: float, theta0: float, z0: float):
        """Inflow foot of the backward streamline through (r0, theta0, z0)."""
        dtheta = self.angular_speed(r0) * self.transit_time(z0)
        return r0, float(np.mod(theta0 - dtheta, 2.0 * np.pi)), 0.0
