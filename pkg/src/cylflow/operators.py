"""Discrete differential operators and norms in cylindrical coordinates.

Formulas (r, theta, z components, cylindrical frame):

    grad(s)   = (ds/dr, (1/r) ds/dtheta, ds/dz)
    div(F)    = dF_r/dr + (F_r + dF_theta/dtheta)/r + dF_z/dz
    curl(F)_r     = (1/r) dF_z/dtheta - dF_theta/dz
    curl(F)_theta = dF_r/dz - dF_z/dr
    curl(F)_z     = dF_theta/dr + (F_theta - dF_r/dtheta)/r

Discretization: spectral differentiation in theta (periodic), second
order centered differences in r and z with one-sided second order
stencils at r = R and z = 0, L.  At the axis the 1/r terms are evaluated
by their smooth limits.  Both the radial derivative at r = 0 and those
limits reduce to the centered ghost formula

    dQ/dr(0, theta) = [Q(dr, theta) - p * Q(dr, theta + pi)] / (2 dr)

where p is the parity of Q under the antipodal reflection
Q(-r, theta) = p * Q(r, theta + pi): p = +1 for scalars (including
Cartesian vector components) and the z component, p = -1 for the r and
theta components of a vector.  The reflection identity is exact for
smooth fields, so no accuracy is lost at the axis.

Norms: the L2 norm uses the trapezoidal cylindrical quadrature from the
grid; the H1 proxy adds the L2 norm of the gradient (for vectors, of
the full Cartesian-component Jacobian).  Summation order is fixed, so
norms are deterministic.
"""

from __future__ import annotations

import numpy as np

from .errors import GridMismatch
from .fields import (
    CYLINDRICAL,
    CapScalarField,
    ScalarField,
    VectorField,
    _check_same_grid,
)
from .grid import CylGrid

SCALAR_PARITY = 1.0
RADIAL_PARITY = -1.0  # F_r and F_theta flip under the antipodal reflection


def _antipodal(slice_at_r1: np.ndarray, half_turn: int) -> np.ndarray:
    """Values at (dr, theta + pi): roll the theta axis (axis 0 here)."""
    return np.roll(slice_at_r1, -half_turn, axis=0)


def _ddr(values: np.ndarray, grid: CylGrid, parity: float) -> np.ndarray:
    """d/dr along axis 0: centered interior, axis ghost row, one-sided at R.

    The boundary stencil is the 4-point one-sided formula whose leading
    error is h^2 f'''/6 -- the same as the centered stencil -- so the
    truncation error stays a smooth field and composed operators
    (curl of curl, div of curl, ...) keep second order up to the wall.
    """
    dr = grid.dr
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2 * dr)
    out[-1] = (
        2.0 * values[-1] - 3.5 * values[-2] + 2.0 * values[-3] - 0.5 * values[-4]
    ) / dr
    ghost = parity * _antipodal(values[1], grid.half_turn)
    out[0] = (values[1] - ghost) / (2 * dr)
    return out


def _ddz(values: np.ndarray, grid: CylGrid) -> np.ndarray:
    dz = grid.dz
    out = np.empty_like(values)
    out[..., 1:-1] = (values[..., 2:] - values[..., :-2]) / (2 * dz)
    out[..., 0] = (
        -2.0 * values[..., 0] + 3.5 * values[..., 1] - 2.0 * values[..., 2] + 0.5 * values[..., 3]
    ) / dz
    out[..., -1] = (
        2.0 * values[..., -1] - 3.5 * values[..., -2] + 2.0 * values[..., -3] - 0.5 * values[..., -4]
    ) / dz
    return out


def _dtheta(values: np.ndarray, grid: CylGrid) -> np.ndarray:
    """Spectral d/dtheta along axis 1 (exact for resolved modes)."""
    n = grid.n_theta
    m = np.fft.fftfreq(n, d=1.0 / n)
    m[n // 2] = 0.0  # odd derivative: drop the Nyquist mode
    shape = [1] * values.ndim
    shape[1] = n
    vh = np.fft.fft(values, axis=1)
    vh *= (1j * m).reshape(shape)
    return np.fft.ifft(vh, axis=1).real


def _over_r(values: np.ndarray, grid: CylGrid, parity: float) -> np.ndarray:
    """values / r where the continuum numerator vanishes on the axis."""
    out = np.empty_like(values)
    rshape = (-1,) + (1,) * (values.ndim - 1)
    out[1:] = values[1:] / grid.r[1:].reshape(rshape)
    ghost = parity * _antipodal(values[1], grid.half_turn)
    out[0] = (values[1] - ghost) / (2 * grid.dr)
    return out


# -- vector calculus ---------------------------------------------------


def _require_cyl(F: VectorField):
    if F.frame != CYLINDRICAL:
        raise ValueError("operator expects a cylindrical-frame vector field")


def grad(s: ScalarField) -> VectorField:
    g = s.grid
    return VectorField(
        g,
        np.stack(
            [
                _ddr(s.values, g, SCALAR_PARITY),
                _over_r(_dtheta(s.values, g), g, SCALAR_PARITY),
                _ddz(s.values, g),
            ]
        ),
        CYLINDRICAL,
    )


def div(F: VectorField) -> ScalarField:
    _require_cyl(F)
    g = F.grid
    fr, ft, fz = F.values
    vals = (
        _ddr(fr, g, RADIAL_PARITY)
        + _over_r(fr + _dtheta(ft, g), g, RADIAL_PARITY)
        + _ddz(fz, g)
    )
    return ScalarField(g, vals)


def curl(F: VectorField) -> VectorField:
    _require_cyl(F)
    g = F.grid
    fr, ft, fz = F.values
    cr = _over_r(_dtheta(fz, g), g, SCALAR_PARITY) - _ddz(ft, g)
    ctheta = _ddz(fr, g) - _ddr(fz, g, SCALAR_PARITY)
    cz = _ddr(ft, g, RADIAL_PARITY) + _over_r(ft - _dtheta(fr, g), g, RADIAL_PARITY)
    return VectorField(g, np.stack([cr, ctheta, cz]), CYLINDRICAL)


def jacobian_cartesian(F: VectorField) -> np.ndarray:
    """Cartesian Jacobian J[a, b] = d(F_a)/d(x_b), shape (3, 3, *grid.shape).

    Each Cartesian component of a smooth vector field is a smooth scalar,
    so the scalar gradient stencils apply; the cylindrical gradient is
    then rotated into the Cartesian frame.
    """
    g = F.grid
    Fc = F.to_cartesian()
    ct = np.cos(g.theta)[None, :, None]
    st = np.sin(g.theta)[None, :, None]
    J = np.empty((3, 3, *g.shape))
    for a in range(3):
        comp = Fc.values[a]
        gr = _ddr(comp, g, SCALAR_PARITY)
        gt = _over_r(_dtheta(comp, g), g, SCALAR_PARITY)
        gz = _ddz(comp, g)
        J[a, 0] = gr * ct - gt * st
        J[a, 1] = gr * st + gt * ct
        J[a, 2] = gz
    return J


def directional_derivative(F: VectorField, G: VectorField) -> VectorField:
    """(F . grad) G, returned in the Cartesian frame."""
    _check_same_grid(F, G)
    J = jacobian_cartesian(G)
    Fc = F.to_cartesian()
    vals = np.einsum("ab...,b...->a...", J, Fc.values)
    return VectorField(F.grid, vals, "cartesian")


# -- norms -------------------------------------------------------------


def _l2_sq(values: np.ndarray, w: np.ndarray) -> float:
    if values.ndim == w.ndim + 1:  # leading component axis
        return float(np.sum(w * np.sum(values**2, axis=0)))
    return float(np.sum(w * values**2))


def norm(field, kind: str = "l2") -> float:
    """Volume norm of a scalar or vector field: 'l2', 'h1' or 'linf'.

    The H1 proxy is sqrt(||f||_L2^2 + ||grad f||_L2^2); for vector
    fields the gradient term sums over all Cartesian Jacobian entries.
    """
    kind = kind.lower()
    g = field.grid
    w = g.volume_weights()
    if kind == "linf":
        return float(np.max(np.abs(field.values)))
    if kind == "l2":
        return np.sqrt(_l2_sq(field.values, w))
    if kind != "h1":
        raise ValueError(f"unknown norm kind {kind!r}")
    if isinstance(field, ScalarField):
        gsq = _l2_sq(grad(field).values, w)
        return float(np.sqrt(_l2_sq(field.values, w) + gsq))
    J = jacobian_cartesian(field)
    jsq = float(np.sum(w * np.sum(J**2, axis=(0, 1))))
    return float(np.sqrt(_l2_sq(field.values, w) + jsq))


def rel_l2_error(approx, exact) -> float:
    _check_same_grid(approx, exact)
    w = approx.grid.volume_weights()
    diff = approx.values - exact.values
    denom = np.sqrt(_l2_sq(exact.values, w))
    if denom == 0.0:
        return np.sqrt(_l2_sq(diff, w))
    return np.sqrt(_l2_sq(diff, w)) / denom


# -- cap-surface operators and norms ------------------------------------


def cap_grad_tangential(s: CapScalarField) -> np.ndarray:
    """Tangential gradient (d/dr, (1/r) d/dtheta) on a cap, shape (2, n_r, n_theta)."""
    g = s.grid
    return np.stack(
        [
            _ddr(s.values, g, SCALAR_PARITY),
            _over_r(_dtheta(s.values, g), g, SCALAR_PARITY),
        ]
    )


def cap_norm(values: np.ndarray, grid: CylGrid, kind: str = "l2") -> float:
    """Area norm on a cap for (n_r, n_theta) arrays or stacks of them."""
    kind = kind.lower()
    w = grid.cap_weights()
    if kind == "linf":
        return float(np.max(np.abs(values)))
    if values.ndim == 3:
        sq = np.sum(values**2, axis=0)
    else:
        sq = values**2
    if kind == "l2":
        return float(np.sqrt(np.sum(w * sq)))
    raise ValueError(f"unknown cap norm kind {kind!r}")


def cap_h1(s: CapScalarField) -> float:
    g = s.grid
    l2sq = np.sum(g.cap_weights() * s.values**2)
    gt = cap_grad_tangential(s)
    gsq = np.sum(g.cap_weights() * np.sum(gt**2, axis=0))
    return float(np.sqrt(l2sq + gsq))


def cap_h1_tangential(gt: np.ndarray, grid: CylGrid) -> float:
    """H1 proxy of a tangential cap vector given as cylindrical components
    (g_r, g_theta) of shape (2, n_r, n_theta).

    The gradient term differentiates the Cartesian components, which are
    smooth scalars on the disk (the cylindrical components are not smooth
    at the axis, so their scalar stencils would be wrong there).
    """
    ct = np.cos(grid.theta)[None, :]
    st = np.sin(grid.theta)[None, :]
    gr, gth = gt
    comps = (gr * ct - gth * st, gr * st + gth * ct)
    w = grid.cap_weights()
    total = np.sum(w * np.sum(gt**2, axis=0))
    for comp in comps:
        s = CapScalarField(grid, np.asarray(comp))
        gg = cap_grad_tangential(s)
        total += np.sum(w * np.sum(gg**2, axis=0))
    return float(np.sqrt(total))
