"""Inflow vorticity datum from the Bernoulli perturbation g and normal
vorticity h.

On the inflow cap (outward normal n = -e_z) the prescribed data are

    n . curl(v) = h            (normal vorticity)
    |v|^2/2 + p = g + |v0|^2/2 + p0    (Bernoulli head perturbation)

and the vorticity boundary value they induce for the transport stage is

    f0 . n = h
    f0_T   = (h / (v.n)) v_T - (1 / (v.n)) n x grad_T(g)

which in cylindrical components with v.n = -v_z reads

    f0_r     = (-h v_r + (1/r) dg/dtheta) / v_z
    f0_theta = (-h v_theta - dg/dr) / v_z
    f0_z     = -h

Admissible data vanish (h, and the tangential gradient of g) on the
edge circle; when that holds to tolerance, make_f0 zeroes the edge ring
of f0 exactly so the downstream transported field vanishes on the
outflow edge circle as the theory demands.  The data size
||h||_H1 + ||grad_T g||_H1 (cap-surface proxy norms) is what the
contraction bound controls; validate() compares it against the
configured admissible bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .errors import DegenerateInflow, GridMismatch
from .fields import CYLINDRICAL, CapScalarField, CapVectorField, VectorField
from .grid import CylGrid

EDGE_DATA_TOL = 1e-8


def edge_slope_tolerance(grid: CylGrid, cap_values: np.ndarray) -> float:
    """Pass threshold for a radial edge slope measured by differencing.

    The one-sided stencil carries a truncation error of dr^2 |f'''| / 6,
    so data that satisfy the condition exactly in the continuum still
    show that much discrete violation; the threshold estimates |f'''|
    from the data's third radial differences and keeps the nominal
    1e-8 * scale floor for quantities evaluated exactly.
    """
    scale = 1.0 + float(np.max(np.abs(cap_values)))
    d3 = float(np.max(np.abs(np.diff(cap_values, 3, axis=0)))) / grid.dr**3
    return EDGE_DATA_TOL * scale + grid.dr**2 * d3 / 3.0


@dataclass(eq=False)
class InflowData:
    g: CapScalarField
    h: CapScalarField

    def __post_init__(self):
        if self.g.cap != "inflow" or self.h.cap != "inflow":
            raise ValueError("inflow data must live on the inflow cap")
        if not self.g.grid.same_as(self.h.grid):
            raise GridMismatch("g and h on different grids")
        self._grad_g = None

    @property
    def grid(self) -> CylGrid:
        return self.g.grid

    @classmethod
    def zero(cls, grid: CylGrid) -> "InflowData":
        return cls(CapScalarField.zeros(grid), CapScalarField.zeros(grid))

    def grad_g_tangential(self) -> np.ndarray:
        if self._grad_g is None:
            self._grad_g = ops.cap_grad_tangential(self.g)
        return self._grad_g

    @property
    def data_size(self) -> float:
        """||h||_H1 + ||grad_T g||_H1 in the cap-surface proxy norms."""
        return ops.cap_h1(self.h) + ops.cap_h1_tangential(self.grad_g_tangential(), self.grid)

    def edge_violation(self) -> float:
        """max of |h| and |grad_T g| on the edge circle."""
        gt = self.grad_g_tangential()
        return float(
            max(np.max(np.abs(self.h.values[-1, :])), np.max(np.abs(gt[:, -1, :])))
        )

    def scaled(self, factor: float) -> "InflowData":
        return InflowData(
            CapScalarField(self.grid, factor * self.g.values, "inflow"),
            CapScalarField(self.grid, factor * self.h.values, "inflow"),
        )


@dataclass
class InflowReport:
    edge_violation: float
    edge_ok: bool
    data_size: float
    size_bound: float | None
    within_bound: bool
    messages: list = field(default_factory=list)


def validate(data: InflowData, size_bound: float | None = None) -> InflowReport:
    """Check the edge-vanishing conditions and the data-size bound.

    Reporting only: an oversized data_size is a warning flag (the
    fixed-point loop may still converge), not an error.
    """
    scale = 1.0 + float(np.max(np.abs(data.h.values)) + np.max(np.abs(data.g.values)))
    edge = data.edge_violation()
    edge_ok = edge <= edge_condition_tolerance(data.grid) * scale
    size = data.data_size
    within = size_bound is None or size <= size_bound
    messages = []
    if not edge_ok:
        messages.append(
            f"h or grad_T g does not vanish on the edge circle (violation {edge:.3e})"
        )
    if not within:
        messages.append(
            f"data size {size:.3e} exceeds the configured admissible bound {size_bound:.3e}; "
            "the iteration may not contract"
        )
    return InflowReport(edge, edge_ok, size, size_bound, within, messages)


def make_f0(data: InflowData, v: VectorField, c_min: float | None = None) -> CapVectorField:
    """Inflow vorticity boundary value induced by (g, h) and velocity v.

    Requires genuinely inflowing velocity on the cap: v_z >= c_min / 2
    when c_min is given (half the base-flow floor), v_z > 0 otherwise;
    violations raise DegenerateInflow.  When the (g, h) edge conditions
    hold to tolerance the edge ring of f0 is zeroed exactly.
    """
    grid = data.grid
    if not grid.same_as(v.grid):
        raise GridMismatch("data and velocity on different grids")
    vcap = v.to_cylindrical().values[:, :, :, 0]
    v_r, v_th, v_z = vcap
    floor = 0.0 if c_min is None else 0.5 * c_min
    worst = float(np.min(v_z))
    if worst <= floor:
        raise DegenerateInflow(
            f"inflow is degenerate: min v_z = {worst:.3e} <= admissible floor {floor:.3e}"
        )
    g_r, g_t = data.grad_g_tangential()
    h = data.h.values
    f0 = np.empty((3, grid.n_r, grid.n_theta))
    f0[0] = (-h * v_r + g_t) / v_z
    f0[1] = (-h * v_th - g_r) / v_z
    f0[2] = -h
    if validate(data).edge_ok:
        f0[:, -1, :] = 0.0
    return CapVectorField(grid, f0, "inflow", CYLINDRICAL)
