"""Scalar Poisson solver on the cylinder with per-face boundary kinds.

The Fourier transform in theta decouples the problem into one 2-D
(r, z) system per azimuthal mode m:

    u_rr + u_r / r - m^2 u / r^2 + u_zz = rhs_m

discretized with second-order centered differences, one-sided
second-order boundary stencils, and the standard axis closure
(4 (u_1 - u_0)/dr^2 for the m = 0 limit of u_rr + u_r/r; u_0 = 0 for
m != 0).  Each mode is solved by a sparse direct factorization, which
is cached per (grid, mode, boundary-kind) signature because the
fixed-point loop reassembles identical systems every iteration.

Boundary kinds per face (inflow cap z=0, outflow cap z=L, mantle r=R):
Dirichlet (u = data), Neumann (du/dn = data, outward normal) or
Robin (du/dn + alpha*u = data).  The all-Neumann problem is singular;
callers must request the gauge-fixed mean-zero solve, which augments
the m = 0 system with a quadrature mean constraint (bordered matrix)
after checking the discrete solvability condition
integral(rhs) = boundary integral(data).

check_compatibility evaluates the edge-circle conditions that decide
whether the mixed problem admits a regular solution: where two
Dirichlet faces meet their data must agree (and, at the strictest
level, the right-hand side must vanish on the edge); where Dirichlet
meets Neumann the edge-normal derivative of the Dirichlet data must
match the Neumann data; where two Neumann faces meet the cross
derivatives of the two data sets must agree.  Levels m in {-1, 0, 1}
select which conditions are active: a condition on an edge whose faces
carry k Dirichlet operators applies when m + k >= 1, and the
rhs-on-edge condition applies only for two Dirichlet faces at m = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import GridMismatch, IncompatibleData, SolverFailure
from .fields import CapScalarField, MantleScalarField, ScalarField
from .grid import CylGrid

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
ROBIN = "robin"

COMPAT_TOL = 1e-8
FLUX_BALANCE_TOL = 1e-8


@dataclass(eq=False)
class FaceBc:
    kind: str
    data: object = None  # CapScalarField / MantleScalarField, zeros if None
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in (DIRICHLET, NEUMANN, ROBIN):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind != ROBIN and self.alpha != 0.0:
            raise ValueError("alpha is only meaningful for Robin faces")

    @property
    def is_dirichlet(self) -> bool:
        return self.kind == DIRICHLET


@dataclass(eq=False)
class BcSpec:
    inflow: FaceBc
    outflow: FaceBc
    mantle: FaceBc

    @classmethod
    def dirichlet_everywhere(cls, grid, inflow=None, outflow=None, mantle=None):
        return cls(
            FaceBc(DIRICHLET, inflow or CapScalarField.zeros(grid, "inflow")),
            FaceBc(DIRICHLET, outflow or CapScalarField.zeros(grid, "outflow")),
            FaceBc(DIRICHLET, mantle or MantleScalarField.zeros(grid)),
        )

    @property
    def all_neumann(self) -> bool:
        return all(f.kind == NEUMANN for f in (self.inflow, self.outflow, self.mantle))

    def signature(self) -> tuple:
        return tuple((f.kind, float(f.alpha)) for f in (self.inflow, self.outflow, self.mantle))

    def face_data(self, grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        din = self.inflow.data.values if self.inflow.data is not None else np.zeros((grid.n_r, grid.n_theta))
        dout = self.outflow.data.values if self.outflow.data is not None else np.zeros((grid.n_r, grid.n_theta))
        dman = self.mantle.data.values if self.mantle.data is not None else np.zeros((grid.n_theta, grid.n_z))
        return din, dout, dman


# -- mode-system assembly ------------------------------------------------


def interior_laplace_entries(grid: CylGrid, m: int, row0: int = 0, col0: int = 0,
                             extra_radial_diag: float = 0.0):
    """COO triplets of the mode-m Laplacian on interior (r, z) nodes.

    extra_radial_diag adds c / r^2 to the diagonal (used by the coupled
    vector-potential blocks, where c = -1).
    """
    nr, nz = grid.n_r, grid.n_z
    dr, dz = grid.dr, grid.dz
    i = np.arange(1, nr - 1)
    k = np.arange(1, nz - 1)
    I, K = np.meshgrid(i, k, indexing="ij")
    I, K = I.ravel(), K.ravel()
    rI = grid.r[I]
    node = I * nz + K
    rows, cols, vals = [], [], []

    def add(r_, c_, v_):
        rows.append(r_ + row0)
        cols.append(c_ + col0)
        vals.append(v_)

    add(node, node, -2.0 / dr**2 - 2.0 / dz**2 + (extra_radial_diag - m * m) / rI**2)
    add(node, node + nz, np.full_like(rI, 1.0 / dr**2) + 1.0 / (2 * rI * dr))
    add(node, node - nz, np.full_like(rI, 1.0 / dr**2) - 1.0 / (2 * rI * dr))
    add(node, node + 1, np.full_like(rI, 1.0 / dz**2))
    add(node, node - 1, np.full_like(rI, 1.0 / dz**2))
    return (np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), node)


def axis_rows_m0(grid: CylGrid, row0: int = 0, col0: int = 0):
    """Axis closure rows for the m = 0 mode at interior z levels."""
    nz = grid.n_z
    dr, dz = grid.dr, grid.dz
    k = np.arange(1, nz - 1)
    node = k  # i = 0
    rows, cols, vals = [], [], []
    rows += [node, node, node, node]
    cols += [node, node + nz, node + 1, node - 1]
    vals += [
        np.full(k.size, -4.0 / dr**2 - 2.0 / dz**2),
        np.full(k.size, 4.0 / dr**2),
        np.full(k.size, 1.0 / dz**2),
        np.full(k.size, 1.0 / dz**2),
    ]
    return (
        np.concatenate([r + row0 for r in rows]),
        np.concatenate([c + col0 for c in cols]),
        np.concatenate(vals),
        node,
    )


def one_sided_z(grid: CylGrid, at_start: bool):
    """(offsets, coeffs) of the outward normal derivative at a cap."""
    c = 1.0 / (2 * grid.dz)
    if at_start:  # z = 0, outward normal -e_z
        return (0, 1, 2), (3 * c, -4 * c, 1 * c)
    return (0, -1, -2), (3 * c, -4 * c, 1 * c)


def one_sided_r(grid: CylGrid):
    """(index offsets in i, coeffs) of d/dr at the mantle (outward)."""
    c = 1.0 / (2 * grid.dr)
    return (0, -1, -2), (3 * c, -4 * c, 1 * c)


def _edge_row_owner(cap_bc: FaceBc, mantle_bc: FaceBc) -> str:
    """Which face's condition is imposed at an edge node: Dirichlet wins,
    caps break ties (the data agree there when compatibility holds)."""
    if cap_bc.is_dirichlet:
        return "cap"
    if mantle_bc.is_dirichlet:
        return "mantle"
    return "cap"


# row kinds: PDE equations vs the different boundary-condition rows
ROW_PDE = 0
ROW_INFLOW = 1
ROW_OUTFLOW = 2
ROW_MANTLE = 3
ROW_AXIS_PIN = 4


def assemble_scalar_mode(grid: CylGrid, m: int, bc: BcSpec):
    """Sparse matrix and row classification for one azimuthal mode.

    Returns (A_csc, row_kind) where row_kind labels every node's row as
    a PDE equation, a face condition, or the m != 0 axis regularity pin.
    """
    nr, nz = grid.n_r, grid.n_z
    n = nr * nz
    rows, cols, vals = [], [], []
    row_kind = np.full(n, ROW_PDE, dtype=np.int8)

    ri, ci, vi, _ = interior_laplace_entries(grid, m)
    rows.append(ri); cols.append(ci); vals.append(vi)

    if m == 0:
        ra, ca, va, _ = axis_rows_m0(grid)
        rows.append(ra); cols.append(ca); vals.append(va)
    else:
        k = np.arange(nz)
        rows.append(k); cols.append(k); vals.append(np.ones(nz))
        row_kind[k] = ROW_AXIS_PIN

    def add_entry(r_, c_, v_):
        rows.append(np.atleast_1d(r_))
        cols.append(np.atleast_1d(c_))
        vals.append(np.atleast_1d(float(v_)))

    def cap_row(i, k, face: FaceBc, at_start: bool):
        node = i * nz + k
        row_kind[node] = ROW_INFLOW if at_start else ROW_OUTFLOW
        if face.is_dirichlet:
            add_entry(node, node, 1.0)
            return
        offs, coeffs = one_sided_z(grid, at_start)
        for o, c in zip(offs, coeffs):
            add_entry(node, node + o, c)
        if face.kind == ROBIN:
            add_entry(node, node, face.alpha)

    def mantle_row(k, face: FaceBc):
        node = (nr - 1) * nz + k
        row_kind[node] = ROW_MANTLE
        if face.is_dirichlet:
            add_entry(node, node, 1.0)
            return
        offs, coeffs = one_sided_r(grid)
        for o, c in zip(offs, coeffs):
            add_entry(node, node + o * nz, c)
        if face.kind == ROBIN:
            add_entry(node, node, face.alpha)

    i_lo = 0 if m == 0 else 1  # m != 0 already pinned the whole axis line
    for i in range(i_lo, nr - 1):
        cap_row(i, 0, bc.inflow, at_start=True)
        cap_row(i, nz - 1, bc.outflow, at_start=False)
    for k in range(1, nz - 1):
        mantle_row(k, bc.mantle)
    # edge nodes
    for k, face, at_start in ((0, bc.inflow, True), (nz - 1, bc.outflow, False)):
        if _edge_row_owner(face, bc.mantle) == "cap":
            cap_row(nr - 1, k, face, at_start)
        else:
            mantle_row(k, bc.mantle)

    A = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsc()
    return A, row_kind


def _mode_rhs(grid: CylGrid, m_index: int, rhs_modes, din_m, dout_m, dman_m,
              row_kind: np.ndarray) -> np.ndarray:
    """Right-hand side of one mode system (complex)."""
    nr, nz = grid.n_r, grid.n_z
    b = np.zeros(nr * nz, dtype=complex)
    bb = rhs_modes[:, m_index, :].reshape(nr * nz)
    node = np.arange(nr * nz)
    i_of, k_of = node // nz, node % nz
    sel = row_kind == ROW_PDE
    b[sel] = bb[sel]
    sel = row_kind == ROW_INFLOW
    b[sel] = din_m[i_of[sel]]
    sel = row_kind == ROW_OUTFLOW
    b[sel] = dout_m[i_of[sel]]
    sel = row_kind == ROW_MANTLE
    b[sel] = dman_m[k_of[sel]]
    return b


_factor_cache: dict = {}


def _factorize(key, matrix):
    fac = _factor_cache.get(key)
    if fac is None:
        if len(_factor_cache) > 256:
            _factor_cache.clear()
        try:
            fac = splu(matrix)
        except RuntimeError as exc:  # singular factorization
            raise SolverFailure(f"sparse factorization failed: {exc}") from exc
        _factor_cache[key] = fac
    return fac


def _signed_modes(n_theta: int) -> np.ndarray:
    return np.fft.fftfreq(n_theta, d=1.0 / n_theta).astype(int)


def solve(rhs: ScalarField, bc: BcSpec, mean_zero: bool = False) -> ScalarField:
    """Solve  Laplace(u) = rhs  with the given per-face conditions.

    mean_zero=True requests the gauge-fixed all-Neumann solve; it is an
    error to pass an all-Neumann spec without it.  Raises
    IncompatibleData when the all-Neumann solvability check fails and
    SolverFailure when a mode factorization breaks down.
    """
    grid = rhs.grid
    if bc.all_neumann and not mean_zero:
        raise ValueError(
            "all-Neumann problem is defined up to a constant; pass mean_zero=True"
        )

    din, dout, dman = bc.face_data(grid)
    if bc.all_neumann:
        _check_neumann_balance(grid, rhs.values, din, dout, dman)

    rhs_modes = np.fft.fft(rhs.values, axis=1)
    din_modes = np.fft.fft(din, axis=1)
    dout_modes = np.fft.fft(dout, axis=1)
    dman_modes = np.fft.fft(dman, axis=0)

    n_theta = grid.n_theta
    ms = _signed_modes(n_theta)
    sol_modes = np.empty_like(rhs_modes)
    sig = bc.signature()
    for j in range(n_theta // 2 + 1):
        m = int(ms[j])
        key = ("scalar", grid.key, m, sig)
        A, row_kind = _cached_matrix(key, grid, m, bc)
        b = _mode_rhs(grid, j, rhs_modes, din_modes[:, j], dout_modes[:, j],
                      dman_modes[j, :], row_kind)
        if bc.all_neumann and m == 0:
            u = _solve_gauged(key, grid, A, row_kind == ROW_PDE, b)
        else:
            fac = _factorize(key + ("lu",), A)
            u = fac.solve(b.real) + 1j * fac.solve(b.imag)
        sol_modes[:, j, :] = u.reshape(grid.n_r, grid.n_z)
        if 0 < j < n_theta - j:
            sol_modes[:, n_theta - j, :] = np.conj(sol_modes[:, j, :])

    u = np.fft.ifft(sol_modes, axis=1).real
    if bc.all_neumann:
        w = grid.volume_weights()
        u -= np.sum(w * u) / np.sum(w)
    return ScalarField(grid, u)


_matrix_cache: dict = {}


def _cached_matrix(key, grid, m, bc):
    entry = _matrix_cache.get(key)
    if entry is None:
        if len(_matrix_cache) > 256:
            _matrix_cache.clear()
        entry = assemble_scalar_mode(grid, m, bc)
        _matrix_cache[key] = entry
    return entry


def _mean_weights_2d(grid: CylGrid) -> np.ndarray:
    cr = np.ones(grid.n_r)
    cr[0] = cr[-1] = 0.5
    cz = np.ones(grid.n_z)
    cz[0] = cz[-1] = 0.5
    return ((grid.r * cr)[:, None] * cz[None, :]).reshape(-1) * grid.dr * grid.dz


def _solve_gauged(key, grid, A, pde_mask, b):
    """Bordered solve of the singular all-Neumann m = 0 system.

    The extra column distributes the compatibility defect uniformly over
    the PDE rows; the extra row pins the quadrature mean of the solution
    to zero.
    """
    w = _mean_weights_2d(grid)
    d = pde_mask.astype(float)
    key2 = key + ("gauged",)
    fac = _factor_cache.get(key2)
    if fac is None:
        if len(_factor_cache) > 256:
            _factor_cache.clear()
        B = sparse.bmat(
            [[A, sparse.csc_matrix(d[:, None])], [sparse.csc_matrix(w[None, :]), None]],
            format="csc",
        )
        try:
            fac = splu(B)
        except RuntimeError as exc:
            raise SolverFailure(f"gauged factorization failed: {exc}") from exc
        _factor_cache[key2] = fac
    bb = np.concatenate([b, [0.0]])
    sol = fac.solve(bb.real) + 1j * fac.solve(bb.imag)
    return sol[:-1]


def _check_neumann_balance(grid, rhs_values, din, dout, dman):
    vol = np.sum(grid.volume_weights() * rhs_values)
    flux = (
        np.sum(grid.cap_weights() * din)
        + np.sum(grid.cap_weights() * dout)
        + np.sum(grid.mantle_weights() * dman)
    )
    scale = 1.0 + abs(vol) + abs(flux)
    if abs(flux - vol) > FLUX_BALANCE_TOL * scale:
        raise IncompatibleData(
            f"all-Neumann solvability violated: boundary flux {flux:.3e} "
            f"!= volume source {vol:.3e}"
        )


def residual(u: ScalarField, rhs: ScalarField, bc: BcSpec) -> float:
    """L2 norm of the discrete interior residual A u - rhs.

    Measures the mode systems actually solved, on PDE rows only; a
    direct solve keeps this at roundoff level regardless of grid size.
    """
    grid = u.grid
    if not grid.same_as(rhs.grid):
        raise GridMismatch("residual: fields on different grids")
    u_modes = np.fft.fft(u.values, axis=1)
    rhs_modes = np.fft.fft(rhs.values, axis=1)
    n_theta = grid.n_theta
    ms = _signed_modes(n_theta)
    res_modes = np.zeros_like(u_modes)
    sig = bc.signature()
    for j in range(n_theta):
        m = int(ms[j])
        key = ("scalar", grid.key, m, sig)
        A, row_kind = _cached_matrix(key, grid, m, bc)
        r = A @ u_modes[:, j, :].reshape(-1) - rhs_modes[:, j, :].reshape(-1)
        r[row_kind != ROW_PDE] = 0.0
        res_modes[:, j, :] = r.reshape(grid.n_r, grid.n_z)
    res = np.fft.ifft(res_modes, axis=1).real
    return float(np.sqrt(np.sum(grid.volume_weights() * res**2)))


# -- edge compatibility --------------------------------------------------


@dataclass
class EdgeCheck:
    cross_violation: float
    cross_active: bool
    rhs_violation: float
    rhs_active: bool
    scale: float

    @property
    def ok(self) -> bool:
        tol = COMPAT_TOL * self.scale
        if self.cross_active and self.cross_violation > tol:
            return False
        if self.rhs_active and self.rhs_violation > tol:
            return False
        return True


@dataclass
class CompatReport:
    level: int
    edges: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.edges.values())


def _apply_cap_operator(face: FaceBc, cap_values, grid, at_start: bool, mantle_values):
    """B_cap applied to the mantle data along the shared edge (theta profile)."""
    if face.is_dirichlet:
        return mantle_values[:, 0] if at_start else mantle_values[:, -1]
    offs, coeffs = one_sided_z(grid, at_start)
    k0 = 0 if at_start else grid.n_z - 1
    out = sum(c * mantle_values[:, k0 + o] for o, c in zip(offs, coeffs))
    if face.kind == ROBIN:
        out = out + face.alpha * mantle_values[:, k0]
    return out


def _apply_mantle_operator(face: FaceBc, cap_values, grid):
    """B_mantle applied to the cap data along the shared edge (theta profile)."""
    if face.is_dirichlet:
        return cap_values[-1, :]
    offs, coeffs = one_sided_r(grid)
    out = sum(c * cap_values[grid.n_r - 1 + o, :] for o, c in zip(offs, coeffs))
    if face.kind == ROBIN:
        out = out + face.alpha * cap_values[-1, :]
    return out


def check_compatibility(rhs: ScalarField, bc: BcSpec, level: int = 0) -> CompatReport:
    """Evaluate the edge-circle compatibility conditions at the given level.

    This is a reporting operation: it never raises, it measures.  See the
    module docstring for which conditions are active at which level.
    """
    if level not in (-1, 0, 1):
        raise ValueError("level must be -1, 0 or 1")
    grid = rhs.grid
    din, dout, dman = bc.face_data(grid)
    report = CompatReport(level=level)
    for name, cap_face, cap_values, k_edge in (
        ("minus", bc.inflow, din, 0),
        ("plus", bc.outflow, dout, grid.n_z - 1),
    ):
        j_cap = 1 if cap_face.is_dirichlet else 0
        j_man = 1 if bc.mantle.is_dirichlet else 0
        K = j_cap + j_man
        at_start = k_edge == 0
        lhs = _apply_mantle_operator(bc.mantle, cap_values, grid)
        rhs_side = _apply_cap_operator(cap_face, cap_values, grid, at_start, dman)
        cross = float(np.max(np.abs(lhs - rhs_side)))
        rhs_edge = float(np.max(np.abs(rhs.values[-1, :, k_edge])))
        scale = 1.0 + max(
            float(np.max(np.abs(cap_values))),
            float(np.max(np.abs(dman))),
            float(np.max(np.abs(rhs.values))),
        )
        report.edges[name] = EdgeCheck(
            cross_violation=cross,
            cross_active=(level + K >= 1),
            rhs_violation=rhs_edge,
            rhs_active=(K == 2 and level == 1),
            scale=scale,
        )
    return report
