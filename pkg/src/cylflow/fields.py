"""Node-indexed scalar and vector fields on a cylindrical grid.

Vector fields carry a frame tag.  Cylindrical components (F_r, F_theta,
F_z) are stored per node; Cartesian components (F_x, F_y, F_z) are
related by the pointwise rotation

    F_x = F_r cos(theta) - F_theta sin(theta)
    F_y = F_r sin(theta) + F_theta cos(theta)

which is orthogonal, so the two conversions are exact inverses up to
roundoff.  Boundary-restricted data live in lightweight cap fields
(values on the (n_r, n_theta) disk) and mantle fields (values on the
(n_theta, n_z) wall).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch
from .grid import CylGrid

CYLINDRICAL = "cylindrical"
CARTESIAN = "cartesian"


def _check_same_grid(*objs):
    g0 = objs[0].grid
    for o in objs[1:]:
        if not g0.same_as(o.grid):
            raise GridMismatch("fields are defined on different grids")
    return g0


def _require_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass(eq=False)
class ScalarField:
    grid: CylGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridMismatch(
                f"scalar values of shape {self.values.shape} do not match grid {self.grid.shape}"
            )

    @classmethod
    def from_function(cls, grid: CylGrid, fn) -> "ScalarField":
        r, t, z = grid.mesh()
        return cls(grid, np.broadcast_to(fn(r, t, z), grid.shape).copy())

    @classmethod
    def zeros(cls, grid: CylGrid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def assert_finite(self) -> "ScalarField":
        _require_finite(self.values, "scalar field")
        return self


@dataclass(eq=False)
class VectorField:
    grid: CylGrid
    values: np.ndarray  # shape (3, n_r, n_theta, n_z)
    frame: str = CYLINDRICAL

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (3, *self.grid.shape):
            raise GridMismatch(
                f"vector values of shape {self.values.shape} do not match grid {self.grid.shape}"
            )
        if self.frame not in (CYLINDRICAL, CARTESIAN):
            raise ValueError(f"unknown frame {self.frame!r}")

    @classmethod
    def from_components(cls, grid, c0, c1, c2, frame=CYLINDRICAL) -> "VectorField":
        comps = [np.broadcast_to(np.asarray(c, dtype=float), grid.shape) for c in (c0, c1, c2)]
        return cls(grid, np.stack(comps), frame)

    @classmethod
    def from_function(cls, grid: CylGrid, fn, frame=CYLINDRICAL) -> "VectorField":
        r, t, z = grid.mesh()
        return cls.from_components(grid, *fn(r, t, z), frame=frame)

    @classmethod
    def zeros(cls, grid: CylGrid, frame=CYLINDRICAL) -> "VectorField":
        return cls(grid, np.zeros((3, *grid.shape)), frame)

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy(), self.frame)

    def assert_finite(self) -> "VectorField":
        _require_finite(self.values, "vector field")
        return self

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.sqrt(np.sum(self.values**2, axis=0)))

    def to_cartesian(self) -> "VectorField":
        if self.frame == CARTESIAN:
            return self
        ct = np.cos(self.grid.theta)[None, :, None]
        st = np.sin(self.grid.theta)[None, :, None]
        fr, ft, fz = self.values
        return VectorField(
            self.grid, np.stack([fr * ct - ft * st, fr * st + ft * ct, fz]), CARTESIAN
        )

    def to_cylindrical(self) -> "VectorField":
        if self.frame == CYLINDRICAL:
            return self
        ct = np.cos(self.grid.theta)[None, :, None]
        st = np.sin(self.grid.theta)[None, :, None]
        fx, fy, fz = self.values
        return VectorField(
            self.grid, np.stack([fx * ct + fy * st, -fx * st + fy * ct, fz]), CYLINDRICAL
        )


def lincomb(a: float, F: VectorField, b: float, G: VectorField) -> VectorField:
    """a*F + b*G in F's frame."""
    _check_same_grid(F, G)
    if F.frame != G.frame:
        G = G.to_cartesian() if F.frame == CARTESIAN else G.to_cylindrical()
    return VectorField(F.grid, a * F.values + b * G.values, F.frame)


# -- boundary-restricted fields ---------------------------------------

_CAPS = ("inflow", "outflow")


@dataclass(eq=False)
class CapScalarField:
    """Scalar data on one cap disk, values indexed (n_r, n_theta)."""

    grid: CylGrid
    values: np.ndarray
    cap: str = "inflow"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_r, self.grid.n_theta)
        if self.values.shape != expected:
            raise GridMismatch(f"cap values {self.values.shape} != {expected}")
        if self.cap not in _CAPS:
            raise ValueError(f"cap must be one of {_CAPS}")

    @classmethod
    def from_function(cls, grid, fn, cap="inflow") -> "CapScalarField":
        r = grid.r[:, None]
        t = grid.theta[None, :]
        return cls(grid, np.broadcast_to(fn(r, t), (grid.n_r, grid.n_theta)).copy(), cap)

    @classmethod
    def zeros(cls, grid, cap="inflow") -> "CapScalarField":
        return cls(grid, np.zeros((grid.n_r, grid.n_theta)), cap)

    @property
    def z_value(self) -> float:
        return 0.0 if self.cap == "inflow" else self.grid.L

    def copy(self) -> "CapScalarField":
        return CapScalarField(self.grid, self.values.copy(), self.cap)


@dataclass(eq=False)
class CapVectorField:
    """Vector data on one cap disk, values indexed (3, n_r, n_theta)."""

    grid: CylGrid
    values: np.ndarray
    cap: str = "inflow"
    frame: str = CYLINDRICAL

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (3, self.grid.n_r, self.grid.n_theta)
        if self.values.shape != expected:
            raise GridMismatch(f"cap vector values {self.values.shape} != {expected}")
        if self.cap not in _CAPS:
            raise ValueError(f"cap must be one of {_CAPS}")

    @classmethod
    def zeros(cls, grid, cap="inflow", frame=CYLINDRICAL) -> "CapVectorField":
        return cls(grid, np.zeros((3, grid.n_r, grid.n_theta)), cap, frame)

    def to_cartesian(self) -> "CapVectorField":
        if self.frame == CARTESIAN:
            return self
        ct = np.cos(self.grid.theta)[None, :]
        st = np.sin(self.grid.theta)[None, :]
        fr, ft, fz = self.values
        return CapVectorField(
            self.grid, np.stack([fr * ct - ft * st, fr * st + ft * ct, fz]), self.cap, CARTESIAN
        )

    def copy(self) -> "CapVectorField":
        return CapVectorField(self.grid, self.values.copy(), self.cap, self.frame)


@dataclass(eq=False)
class MantleScalarField:
    """Scalar data on the mantle r = R, values indexed (n_theta, n_z)."""

    grid: CylGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_theta, self.grid.n_z)
        if self.values.shape != expected:
            raise GridMismatch(f"mantle values {self.values.shape} != {expected}")

    @classmethod
    def from_function(cls, grid, fn) -> "MantleScalarField":
        t = grid.theta[:, None]
        z = grid.z[None, :]
        return cls(grid, np.broadcast_to(fn(t, z), (grid.n_theta, grid.n_z)).copy())

    @classmethod
    def zeros(cls, grid) -> "MantleScalarField":
        return cls(grid, np.zeros((grid.n_theta, grid.n_z)))


def cap_slice_scalar(s: ScalarField, cap: str) -> CapScalarField:
    k = 0 if cap == "inflow" else -1
    return CapScalarField(s.grid, s.values[:, :, k].copy(), cap)


def cap_slice_vector(F: VectorField, cap: str) -> CapVectorField:
    k = 0 if cap == "inflow" else -1
    return CapVectorField(F.grid, F.values[:, :, :, k].copy(), cap, F.frame)
