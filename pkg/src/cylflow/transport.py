"""Vorticity transport along streamlines.

Solves  (v . grad) f = (f . grad) v  in the cylinder with f prescribed
on the inflow cap.  Along a time-parameterized streamline x(t) the PDE
becomes the linear ODE

    d/dt f(x(t)) = J_v(x(t)) f(x(t)),      J_v = Cartesian velocity Jacobian,

so for each grid node we trace its streamline backward to the inflow
foot point, evaluate the boundary datum there, and integrate the ODE
forward along the recorded time grid (coupled with the position so the
Jacobian is sampled on the same path; the node-position closure error
of that forward pass is stored as a per-node ODE error estimate).

Scalars advect the same way with zero source, so a transported scalar
is simply its boundary value at the foot point; that path is shared by
the Bernoulli-head transport used in pressure recovery.

Nodes on the closed inflow cap keep the boundary value exactly. Axis
nodes are traced once per z level (their theta copies are one physical
point).  Mantle and edge nodes ride wall-pinned streamlines: their foot
points land on the inflow edge circle, so a boundary datum vanishing
there propagates an exactly zero field onto the outflow edge circle.

The measured-stability probe reports the ratios ||f|| / ||f0|| (volume
vs cap norms, L2 and H1 proxies) and the velocity-perturbation ratio
||f2 - f1|| / (||f0|| * ||v2 - v1||); the theory bounds all of them by
constants independent of the data, so they should stay flat under grid
refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operators as ops
from .errors import GridMismatch, StagnationDetected
from .fields import (
    CARTESIAN,
    CapScalarField,
    CapVectorField,
    ScalarField,
    VectorField,
)
from .interpolation import FastFieldBatch, FastGeometry, SpectralSampler, cart_to_cyl
from .streamlines import (
    EnsembleTracer,
    TraceSettings,
    default_length_cap,
    raise_for_status,
)


@dataclass(eq=False)
class TransportField:
    """Transported vector field plus per-node streamline diagnostics."""

    f: VectorField
    path_length: np.ndarray   # arclength of the streamline used per node
    steps: np.ndarray         # accepted RK4 steps per node
    ode_error: np.ndarray     # forward-replay position closure error
    max_jacobian: float       # max Frobenius norm of J_v seen on any path
    max_time: float           # longest streamline time


class CharacteristicMap:
    """Backward foot-point map of one velocity field, reusable for any datum.

    Building the map runs the hypothesis checks and the backward trace
    sweep once; transport_vector / transport_scalar then evaluate data.
    """

    def __init__(self, v: VectorField, *, c_min: float | None = None,
                 l_max: float | None = None, tol_per_length: float = 1e-9,
                 upsample: int = 8):
        grid = v.grid
        self.grid = grid
        self.v = v.to_cylindrical()
        vcart = v.to_cartesian()

        axial_min = float(np.min(self.v.values[2]))
        if axial_min <= 0.0:
            raise StagnationDetected(
                f"velocity field has min axial component {axial_min:.3e} <= 0; "
                "backward characteristics cannot reach the inflow cap"
            )
        self.min_speed = 0.5 * c_min if c_min is not None else 0.0
        vmax = float(np.max(np.linalg.norm(vcart.values, axis=0)))
        floor = c_min if c_min is not None else axial_min
        self.l_max = l_max if l_max is not None else default_length_cap(grid, vmax, floor)

        self.geometry = FastGeometry(grid, upsample)
        self.v_batch = FastFieldBatch(self.geometry, list(vcart.values), [1.0] * 3)
        J = ops.jacobian_cartesian(self.v)
        self.vj_batch = FastFieldBatch(
            self.geometry,
            list(vcart.values) + [J[a, b] for a in range(3) for b in range(3)],
            [1.0] * 12,
        )

        settings = TraceSettings(
            tol_per_length=tol_per_length,
            l_max=self.l_max,
            min_speed=self.min_speed,
            dt_init=0.1 * grid.L / max(vmax, 1e-30),
            dt_max=grid.L / max(vmax, 1e-30),
        )
        self._build_seeds()
        tracer = EnsembleTracer(self.v, settings, upsample, batch=self.v_batch)
        self.result = tracer.trace(self.seeds, "backward", self.pinned)
        raise_for_status(self.result.status, self.min_speed, self.l_max)
        self.foot = self.result.foot
        self.foot_cyl = cart_to_cyl(grid, self.foot)

    def _build_seeds(self):
        g = self.grid
        nodes = []
        pinned = []
        # axis seeds: one per z level above the inflow cap
        self.n_axis = g.n_z - 1
        zs = g.z[1:]
        nodes.append(np.stack([np.zeros_like(zs), np.zeros_like(zs), zs], axis=1))
        pinned.append(np.zeros(self.n_axis, dtype=bool))
        # bulk seeds: i >= 1, all theta, z above the inflow cap
        I, J, K = np.meshgrid(
            np.arange(1, g.n_r), np.arange(g.n_theta), np.arange(1, g.n_z), indexing="ij"
        )
        self.bulk_index = (I.ravel(), J.ravel(), K.ravel())
        r = g.r[self.bulk_index[0]]
        th = g.theta[self.bulk_index[1]]
        z = g.z[self.bulk_index[2]]
        nodes.append(np.stack([r * np.cos(th), r * np.sin(th), z], axis=1))
        pinned.append(self.bulk_index[0] == g.n_r - 1)
        self.seeds = np.concatenate(nodes)
        self.pinned = np.concatenate(pinned)

    # -- data evaluation at the foot points ---------------------------

    def _foot_values(self, cap_values: np.ndarray, parity: float = 1.0) -> np.ndarray:
        sampler = SpectralSampler(self.grid, cap_values, parity)
        pts = np.stack(
            [self.foot_cyl[:, 0], self.foot_cyl[:, 1], np.zeros(len(self.foot_cyl))], axis=1
        )
        return sampler(pts)

    def transport_scalar(self, s0: CapScalarField) -> ScalarField:
        """Pure advection: the value rides unchanged along each streamline."""
        if s0.cap != "inflow":
            raise ValueError("transported scalar data must live on the inflow cap")
        if not s0.grid.same_as(self.grid):
            raise GridMismatch("datum grid differs from the velocity grid")
        g = self.grid
        vals = self._foot_values(s0.values)
        out = np.empty(g.shape)
        out[:, :, 0] = s0.values
        out[0, :, 1:] = vals[: self.n_axis][None, :]
        out[self.bulk_index[0], self.bulk_index[1], self.bulk_index[2]] = vals[self.n_axis:]
        return ScalarField(g, out)

    def transport_vector(self, f0: CapVectorField) -> TransportField:
        """Transport a vector datum with the velocity-Jacobian source."""
        if f0.cap != "inflow":
            raise ValueError("transported vector data must live on the inflow cap")
        if not f0.grid.same_as(self.grid):
            raise GridMismatch("datum grid differs from the velocity grid")
        g = self.grid
        f0c = f0.to_cartesian()
        start = np.stack([self._foot_values(c) for c in f0c.values], axis=1)
        x_end, f_end, max_j = self._replay(start)

        fvals = np.empty((3, *g.shape))
        fvals[:, :, :, 0] = f0c.values
        fvals[:, 0, :, 1:] = f_end[: self.n_axis].T[:, None, :]
        fvals[:, self.bulk_index[0], self.bulk_index[1], self.bulk_index[2]] = (
            f_end[self.n_axis:].T
        )
        f = VectorField(g, fvals, CARTESIAN).to_cylindrical()

        closure = np.linalg.norm(x_end - self.seeds, axis=1)
        return TransportField(
            f=f.assert_finite(),
            path_length=self._scatter(self.result.lengths),
            steps=self._scatter(self.result.counts.astype(float)),
            ode_error=self._scatter(closure),
            max_jacobian=max_j,
            max_time=float(np.max(self.result.times, initial=0.0)),
        )

    def _scatter(self, per_seed: np.ndarray) -> np.ndarray:
        g = self.grid
        out = np.zeros(g.shape)
        out[0, :, 1:] = per_seed[: self.n_axis][None, :]
        out[self.bulk_index[0], self.bulk_index[1], self.bulk_index[2]] = per_seed[self.n_axis:]
        return out

    def _replay(self, f_start: np.ndarray):
        """Forward RK4 of (x' = v, f' = J_v f) along the recorded steps."""
        res = self.result
        g = self.grid
        x = res.foot.copy()
        f = f_start.copy()
        counts = res.counts
        max_steps = int(np.max(counts, initial=0))
        max_j = 0.0

        def stage(xs, fs):
            nonlocal max_j
            vals = self.vj_batch.sample_cart(xs)
            vel = vals[:, :3]
            Jm = vals[:, 3:].reshape(-1, 3, 3)
            max_j = max(max_j, float(np.max(np.sqrt(np.sum(Jm**2, axis=(1, 2))))))
            return vel, np.einsum("nab,nb->na", Jm, fs)

        for q in range(max_steps):
            act = np.flatnonzero(counts > q)
            h = res.dts[act, counts[act] - 1 - q][:, None]
            xa, fa = x[act], f[act]
            k1x, k1f = stage(xa, fa)
            k2x, k2f = stage(xa + 0.5 * h * k1x, fa + 0.5 * h * k1f)
            k3x, k3f = stage(xa + 0.5 * h * k2x, fa + 0.5 * h * k2f)
            k4x, k4f = stage(xa + h * k3x, fa + h * k3f)
            xn = xa + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            fn = fa + h / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f)
            rho = np.hypot(xn[:, 0], xn[:, 1])
            fix = (rho > g.R) | self.pinned[act]
            sel = fix & (rho > 0)
            xn[sel, 0] *= g.R / rho[sel]
            xn[sel, 1] *= g.R / rho[sel]
            x[act], f[act] = xn, fn
        return x, f, max_j


def solve_transport(v: VectorField, f0: CapVectorField, *, c_min: float | None = None,
                    l_max: float | None = None, tol_per_length: float = 1e-9,
                    upsample: int = 8) -> TransportField:
    cm = CharacteristicMap(v, c_min=c_min, l_max=l_max,
                           tol_per_length=tol_per_length, upsample=upsample)
    return cm.transport_vector(f0)


def transport_scalar(v: VectorField, s0: CapScalarField, *, c_min: float | None = None,
                     l_max: float | None = None, tol_per_length: float = 1e-9,
                     upsample: int = 8) -> ScalarField:
    cm = CharacteristicMap(v, c_min=c_min, l_max=l_max,
                           tol_per_length=tol_per_length, upsample=upsample)
    return cm.transport_scalar(s0)


def cap_vector_l2(f0: CapVectorField) -> float:
    return ops.cap_norm(f0.values, f0.grid, "l2")


def cap_vector_h1(f0: CapVectorField) -> float:
    """Cap H1 proxy through the Cartesian components (smooth scalars)."""
    fc = f0.to_cartesian()
    total = 0.0
    for comp in fc.values:
        total += ops.cap_h1(CapScalarField(f0.grid, comp, f0.cap)) ** 2
    return float(np.sqrt(total))


def estimates_probe(f, f0: CapVectorField, pair=None) -> dict:
    """Measured stability constants of the transport solve.

    pair, when given, is ((f1, v1), (f2, v2)) from two velocity fields
    with the same datum; adds the perturbation ratio.  Zero data reports
    zero ratios by convention.
    """
    fv = f.f if isinstance(f, TransportField) else f
    l2_0 = cap_vector_l2(f0)
    h1_0 = cap_vector_h1(f0)
    out = {
        "l2_ratio": ops.norm(fv, "l2") / l2_0 if l2_0 > 0 else 0.0,
        "h1_ratio": ops.norm(fv, "h1") / h1_0 if h1_0 > 0 else 0.0,
    }
    if pair is not None:
        (f1, v1), (f2, v2) = pair
        f1v = f1.f if isinstance(f1, TransportField) else f1
        f2v = f2.f if isinstance(f2, TransportField) else f2
        dv = VectorField(v1.grid, v2.to_cylindrical().values - v1.to_cylindrical().values)
        df = VectorField(f1v.grid, f2v.values - f1v.values, f1v.frame)
        denom = h1_0 * ops.norm(dv, "h1")
        out["perturbation_ratio"] = ops.norm(df, "l2") / denom if denom > 0 else 0.0
    return out
