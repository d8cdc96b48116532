"""Velocity reconstruction from vorticity: curl w = f, div w = 0, w.n = 0.

The solve goes through a vector potential u with

    curl u = -w,   div u = 0,   u x n = 0   on the boundary,

which turns the problem into the vector Poisson equation Laplace(u) = f
with the tangential components of u pinned to zero on every face and
the normal component carrying the trace of div u = 0:

    caps   z = 0, L:   u_r = u_theta = 0 (Dirichlet),  d(u_z)/dz = 0 (Neumann)
    mantle r = R:      u_theta = u_z = 0 (Dirichlet),  d(u_r)/dr + u_r / r = 0 (Robin)

In the theta-Fourier decomposition u_z decouples into the scalar solver;
(u_r, u_theta) couple through the 1/r^2 terms of the cylindrical vector
Laplacian,

    (Lap u)_r     = (Lap_m - 1/r^2) u_r - (2 i m / r^2) u_theta
    (Lap u)_theta = (Lap_m - 1/r^2) u_theta + (2 i m / r^2) u_r

and are solved jointly as a 2x2 block system per mode, with axis
regularity rows (u_r = u_theta = 0 except |m| = 1, where the combination
u_r -+ i u_theta vanishes and the other has zero radial slope).  The
reconstructed field is w = -curl(u).

Admissible input is divergence free with vanishing edge-tangential
component (the e_theta trace on the edge circles); validate_f measures
both on the Linf-normalized field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import operators as ops
from . import poisson
from .errors import ValidationFailure
from .fields import CapScalarField, MantleScalarField, ScalarField, VectorField
from .grid import CylGrid

DIV_TOL_DEFAULT = 1e-6
EDGE_TANGENTIAL_TOL = 1e-6


@dataclass
class FReport:
    div_residual: float       # ||div f||_L2 on the Linf-normalized field
    edge_tangential: float    # max |f_theta| on the edge circles, normalized
    div_ok: bool
    edge_ok: bool

    @property
    def ok(self) -> bool:
        return self.div_ok and self.edge_ok


def validate_f(f: VectorField, div_tol: float = DIV_TOL_DEFAULT,
               edge_tol: float = EDGE_TANGENTIAL_TOL) -> FReport:
    """Measure the solvability hypotheses on f (reporting only)."""
    fc = f.to_cylindrical()
    scale = float(np.max(np.abs(fc.values)))
    if scale == 0.0:
        return FReport(0.0, 0.0, True, True)
    divres = ops.norm(ops.div(fc), "l2") / scale
    edge = float(np.max(np.abs(fc.values[1, -1, :, [0, -1]]))) / scale
    return FReport(divres, edge, divres <= div_tol, edge <= edge_tol)


def _axis_block_rows(grid: CylGrid, m: int, n: int):
    """Axis regularity rows of the coupled (u_r, u_theta) system.

    Returns COO triplets; row indices follow the block layout
    [u_r (n); u_theta (n)] with the r/theta axis rows stored in the
    respective blocks.
    """
    nz, dr = grid.n_z, grid.dr
    rows, cols, vals = [], [], []

    def add(r_, c_, v_):
        rows.append(r_)
        cols.append(c_)
        vals.append(v_)

    for k in range(1, nz - 1):
        node = k  # i = 0
        if abs(m) == 1:
            s = 1.0 if m > 0 else -1.0
            # vanishing combination u_r - i s u_theta
            add(node, node, 1.0)
            add(node, n + node, -1j * s)
            # zero radial slope of the finite combination u_r + i s u_theta
            c = 1.0 / (2 * dr)
            for o, w in ((0, -3 * c), (1, 4 * c), (2, -1 * c)):
                add(n + node, node + o * nz, w)
                add(n + node, n + node + o * nz, w * 1j * s)
        else:
            add(node, node, 1.0)
            add(n + node, n + node, 1.0)
    return rows, cols, vals


def _assemble_block(grid: CylGrid, m: int):
    """Coupled (u_r, u_theta) mode system; returns (A_csc, pde_mask(2n,))."""
    nr, nz = grid.n_r, grid.n_z
    n = nr * nz
    dr = grid.dr
    rows, cols, vals = [], [], []
    pde = np.zeros(2 * n, dtype=bool)

    # the theta-derivative coupling follows the spectral convention: the
    # Nyquist mode carries no odd derivative
    m_c = 0 if 2 * abs(m) == grid.n_theta else m

    for block, sign in ((0, -1.0), (n, 1.0)):
        ri, ci, vi, nodes = poisson.interior_laplace_entries(
            grid, m, row0=block, col0=block, extra_radial_diag=-1.0
        )
        rows += list(ri); cols += list(ci); vals += list(vi)
        pde[nodes + block] = True
        rI = grid.r[nodes // nz]
        rows += list(nodes + block)
        cols += list(nodes + (n - block))
        vals += list(sign * 2j * m_c / rI**2)

    ra, ca, va = _axis_block_rows(grid, m, n)
    rows += ra; cols += ca; vals += va

    def dir_row(row, col):
        rows.append(row); cols.append(col); vals.append(1.0)

    # caps: u_r = u_theta = 0 everywhere including the edge ring
    for i in range(1, nr):
        for k in (0, nz - 1):
            node = i * nz + k
            dir_row(node, node)
            dir_row(n + node, n + node)
    for k in (0, nz - 1):  # axis-cap corners
        dir_row(k, k)
        dir_row(n + k, n + k)
    # mantle (z interior): u_theta Dirichlet, u_r Robin d/dr + 1/R
    offs, coeffs = poisson.one_sided_r(grid)
    for k in range(1, nz - 1):
        node = (nr - 1) * nz + k
        dir_row(n + node, n + node)
        for o, c in zip(offs, coeffs):
            rows.append(node); cols.append(node + o * nz); vals.append(c)
        rows.append(node); cols.append(node); vals.append(1.0 / grid.R)

    A = sparse.coo_matrix(
        (np.asarray(vals, dtype=complex),
         (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(2 * n, 2 * n),
    ).tocsc()
    return A, pde


_block_cache: dict = {}


def _cached_block(grid: CylGrid, m: int):
    key = ("divcurl-block", grid.key, m)
    entry = _block_cache.get(key)
    if entry is None:
        if len(_block_cache) > 128:
            _block_cache.clear()
        A, pde = _assemble_block(grid, m)
        from scipy.sparse.linalg import splu

        entry = (splu(A), pde)
        _block_cache[key] = entry
    return entry


def solve_potential_components(f: VectorField) -> VectorField:
    """Vector potential u with Laplace(u) = f under the face conditions."""
    grid = f.grid
    fc = f.to_cylindrical()
    fr_modes = np.fft.fft(fc.values[0], axis=1)
    ft_modes = np.fft.fft(fc.values[1], axis=1)
    n_theta = grid.n_theta
    ms = np.fft.fftfreq(n_theta, d=1.0 / n_theta).astype(int)
    n = grid.n_r * grid.n_z
    ur_modes = np.empty_like(fr_modes)
    ut_modes = np.empty_like(ft_modes)
    for j in range(n_theta // 2 + 1):
        m = int(ms[j])
        lu, pde = _cached_block(grid, m)
        b = np.zeros(2 * n, dtype=complex)
        stacked = np.concatenate(
            [fr_modes[:, j, :].reshape(-1), ft_modes[:, j, :].reshape(-1)]
        )
        b[pde] = stacked[pde]
        sol = lu.solve(b)
        ur_modes[:, j, :] = sol[:n].reshape(grid.n_r, grid.n_z)
        ut_modes[:, j, :] = sol[n:].reshape(grid.n_r, grid.n_z)
        if 0 < j < n_theta - j:
            ur_modes[:, n_theta - j, :] = np.conj(ur_modes[:, j, :])
            ut_modes[:, n_theta - j, :] = np.conj(ut_modes[:, j, :])
    u_r = np.fft.ifft(ur_modes, axis=1).real
    u_t = np.fft.ifft(ut_modes, axis=1).real

    # u_z: scalar problem, Neumann caps (slope 0), Dirichlet mantle
    bc = poisson.BcSpec(
        poisson.FaceBc(poisson.NEUMANN, CapScalarField.zeros(grid, "inflow")),
        poisson.FaceBc(poisson.NEUMANN, CapScalarField.zeros(grid, "outflow")),
        poisson.FaceBc(poisson.DIRICHLET, MantleScalarField.zeros(grid)),
    )
    u_z = poisson.solve(ScalarField(grid, fc.values[2]), bc)
    return VectorField(grid, np.stack([u_r, u_t, u_z.values]))


def solve(f: VectorField, div_tol: float = DIV_TOL_DEFAULT,
          edge_tol: float = EDGE_TANGENTIAL_TOL) -> VectorField:
    """Reconstruct w with curl w = f, div w = 0, w.n = 0.

    Validates f first (ValidationFailure on inadmissible input), then
    solves the three potential problems and returns w = -curl(u).
    """
    report = validate_f(f, div_tol, edge_tol)
    if not report.ok:
        raise ValidationFailure(
            "vorticity input is inadmissible: "
            f"div residual {report.div_residual:.3e} (tol {div_tol:.1e}), "
            f"edge-tangential trace {report.edge_tangential:.3e} (tol {edge_tol:.1e})"
        )
    u = solve_potential_components(f)
    w = ops.curl(u)
    return VectorField(f.grid, -w.values)


def estimates_probe(w: VectorField, f: VectorField) -> dict:
    """Measured stability ratio ||w||_H1 / ||f||_L2 (0 for zero input)."""
    l2f = ops.norm(f, "l2")
    return {"h1_over_l2": ops.norm(w, "h1") / l2f if l2f > 0 else 0.0}
