"""Structured grid for the cylinder Omega = {r < R} x (0, L).

Nodes sit at r_i = i*dr (including the axis r=0), theta_j = j*dtheta
(periodic) and z_k = k*dz, stored in C order with shape
(n_r, n_theta, n_z).  Every node carries exactly one boundary tag:

    INTERIOR    r < R, 0 < z < L          (axis nodes are interior)
    INFLOW      z = 0, r < R              (fluid enters here)
    OUTFLOW     z = L, r < R
    MANTLE      r = R, 0 < z < L          (no flux through this wall)
    EDGE_MINUS  r = R, z = 0              (inflow cap meets mantle)
    EDGE_PLUS   r = R, z = L

The theta direction is periodic with an even node count so that the
antipodal map j -> j + n_theta/2 is exact on the index set; radial
ghost values across the axis use it (a smooth function satisfies
q(-r, theta) = q(r, theta + pi)).

Volume quadrature uses the cylindrical element r*dr*dtheta*dz with
trapezoidal end weights in r and z, which integrates smooth fields to
O(h^2) and is exact for the constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGrid

INTERIOR = 0
INFLOW = 1
OUTFLOW = 2
MANTLE = 3
EDGE_MINUS = 4
EDGE_PLUS = 5

TAG_NAMES = {
    INTERIOR: "interior",
    INFLOW: "inflow",
    OUTFLOW: "outflow",
    MANTLE: "mantle",
    EDGE_MINUS: "edge_minus",
    EDGE_PLUS: "edge_plus",
}


@dataclass(eq=False)
class CylGrid:
    """Uniform cylindrical grid with boundary tags.

    Build instances with :func:`build_grid`; the constructor assumes
    pre-validated parameters.
    """

    R: float
    L: float
    n_r: int
    n_theta: int
    n_z: int
    r: np.ndarray = field(repr=False, default=None)
    theta: np.ndarray = field(repr=False, default=None)
    z: np.ndarray = field(repr=False, default=None)
    tags: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self.dr = self.R / (self.n_r - 1)
        self.dtheta = 2.0 * np.pi / self.n_theta
        self.dz = self.L / (self.n_z - 1)
        if self.r is None:
            self.r = np.linspace(0.0, self.R, self.n_r)
            self.theta = np.arange(self.n_theta) * self.dtheta
            self.z = np.linspace(0.0, self.L, self.n_z)
        if self.tags is None:
            self.tags = self._make_tags()
        # antipodal index shift used by axis ghost rules
        self.half_turn = self.n_theta // 2
        self._volume_weights = None
        self._cap_weights = None

    def _make_tags(self) -> np.ndarray:
        tags = np.full((self.n_r, self.n_theta, self.n_z), INTERIOR, dtype=np.int8)
        tags[:-1, :, 0] = INFLOW
        tags[:-1, :, -1] = OUTFLOW
        tags[-1, :, 1:-1] = MANTLE
        tags[-1, :, 0] = EDGE_MINUS
        tags[-1, :, -1] = EDGE_PLUS
        return tags

    # -- bookkeeping -------------------------------------------------

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_r, self.n_theta, self.n_z)

    @property
    def n_nodes(self) -> int:
        return self.n_r * self.n_theta * self.n_z

    @property
    def key(self) -> tuple:
        """Hashable identity used by solver factorization caches."""
        return (self.R, self.L, self.n_r, self.n_theta, self.n_z)

    @property
    def axis_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[0] = True
        return m

    # -- coordinates -------------------------------------------------

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (r, theta, z) coordinate arrays."""
        return (
            self.r[:, None, None],
            self.theta[None, :, None],
            self.z[None, None, :],
        )

    def nodes_cyl(self) -> np.ndarray:
        """All node coordinates as an array of shape (n_nodes, 3)."""
        r3, t3, z3 = np.broadcast_arrays(*self.mesh())
        return np.stack([r3.ravel(), t3.ravel(), z3.ravel()], axis=1)

    def nodes_cart(self) -> np.ndarray:
        pts = self.nodes_cyl()
        x = pts[:, 0] * np.cos(pts[:, 1])
        y = pts[:, 0] * np.sin(pts[:, 1])
        return np.stack([x, y, pts[:, 2]], axis=1)

    # -- quadrature --------------------------------------------------

    def volume_weights(self) -> np.ndarray:
        """Quadrature weights w_ijk ~ r dr dtheta dz, trapezoidal ends."""
        if self._volume_weights is None:
            cr = np.ones(self.n_r)
            cr[0] = cr[-1] = 0.5
            cz = np.ones(self.n_z)
            cz[0] = cz[-1] = 0.5
            w = (
                (self.r * cr)[:, None, None]
                * np.ones(self.n_theta)[None, :, None]
                * cz[None, None, :]
            )
            self._volume_weights = w * self.dr * self.dtheta * self.dz
            self._volume_weights.setflags(write=False)
        return self._volume_weights

    def cap_weights(self) -> np.ndarray:
        """Area weights on a cap disk, shape (n_r, n_theta)."""
        if self._cap_weights is None:
            cr = np.ones(self.n_r)
            cr[0] = cr[-1] = 0.5
            w = (self.r * cr)[:, None] * np.ones(self.n_theta)[None, :]
            self._cap_weights = w * self.dr * self.dtheta
            self._cap_weights.setflags(write=False)
        return self._cap_weights

    def mantle_weights(self) -> np.ndarray:
        """Area weights on the mantle r = R, shape (n_theta, n_z)."""
        cz = np.ones(self.n_z)
        cz[0] = cz[-1] = 0.5
        return self.R * self.dtheta * self.dz * np.ones(self.n_theta)[:, None] * cz[None, :]

    def same_as(self, other: "CylGrid") -> bool:
        return self is other or self.key == other.key


def build_grid(R: float, L: float, n_r: int, n_theta: int, n_z: int) -> CylGrid:
    """Create a tagged cylindrical grid.

    Raises InvalidGrid for non-positive dimensions, node counts below 4,
    or an odd n_theta (the axis ghost rule needs the antipodal node).
    """
    if not (R > 0 and L > 0) or not np.isfinite(R) or not np.isfinite(L):
        raise InvalidGrid(f"cylinder dimensions must be positive, got R={R}, L={L}")
    for name, n in (("n_r", n_r), ("n_theta", n_theta), ("n_z", n_z)):
        if int(n) != n or n < 4:
            raise InvalidGrid(f"{name} must be an integer >= 4, got {n}")
    if n_theta % 2 != 0:
        raise InvalidGrid(f"n_theta must be even, got {n_theta}")
    return CylGrid(float(R), float(L), int(n_r), int(n_theta), int(n_z))
