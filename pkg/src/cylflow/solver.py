"""Fixed-point construction of the rotational flow, and its audits.

One sweep of the update map does, given the current perturbation u:

    v = v0 + u
    f0 = inflow vorticity datum from (g, h) and v
    f  = transport of f0 along the streamlines of v
    w  = velocity reconstruction with curl w = f, div w = 0, w.n = 0

and the Picard iteration u <- (1 - omega) u + omega * sweep(u) from
u = 0 converges to the rotational perturbation whenever the boundary
data are small enough; the update ratios it records are the measured
contraction constants.  Pressure is recovered from the Bernoulli head:
H = |v|^2/2 + p rides unchanged along streamlines of any steady Euler
flow, and its inflow trace is g + |v0|^2/2 + p0.

The residual audit measures, in volume L2 norms, the momentum equation
(v.grad)v + grad p, the divergence of v, the vorticity-form equation
(v.grad)(curl v) - ((curl v).grad)v, and (when flux data are supplied)
the boundary flux mismatch v.n - phi.

Instrumentation: lipschitz_probe measures the data-to-solution
stability constants on pairs of boundary data; calibrate_size_bound
bisects the data amplitude until the second-iterate contraction ratio
crosses a target, which is how the admissible data-size bound stored in
run configurations is produced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import divcurl
from . import operators as ops
from .base_flow import BaseFlow, FluxData
from .boundary_data import InflowData, make_f0
from .errors import HypothesisViolation, NoConvergence
from .fields import (
    CapScalarField,
    ScalarField,
    VectorField,
    cap_slice_scalar,
    cap_slice_vector,
    lincomb,
)
from .transport import CharacteristicMap

DIV_TOL_FLOOR = 1e-6


@dataclass
class SolverConfig:
    """Tolerances and caps for the fixed-point solve."""

    tol_fp: float = 1e-8           # H1-proxy tolerance on updates
    max_iter: int = 40
    omega: float = 1.0             # under-relaxation, 1 = pure Picard
    k1: float | None = None        # admissible data-size bound (calibrated)
    l_max: float | None = None     # streamline length cap, None -> automatic
    trace_tol: float = 1e-9        # RK4 tolerance per unit arclength
    theta_upsample: int = 8        # tracing interpolant refinement
    div_tol: float | None = None   # vorticity divergence gate, None -> grid-aware
    edge_tol: float = 1e-6         # edge-tangential vorticity gate

    def __post_init__(self):
        if not self.tol_fp > 0:
            raise ValueError("tol_fp must be positive")
        if not (0.0 < self.omega <= 1.0):
            raise ValueError("omega must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def div_tol_for(self, grid) -> float:
        """Divergence gate: transported fields carry O(h^2) discrete
        divergence, so the admissibility threshold tracks the grid."""
        if self.div_tol is not None:
            return self.div_tol
        h = max(grid.dr, grid.dz) / min(grid.R, grid.L)
        return max(DIV_TOL_FLOOR, h * h)


@dataclass(eq=False)
class FlowState:
    v: VectorField
    p: ScalarField
    f: VectorField                 # curl v
    u: VectorField                 # v - v0
    converged: bool
    iterations: int
    history: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    transport_diagnostics: dict = field(default_factory=dict)


def transport_reconstruct(u: VectorField, data: InflowData, base: BaseFlow,
                          config: SolverConfig | None = None):
    """One sweep of the update map; returns (w, characteristic_map, tfield).

    Hypothesis violations (stagnation, runaway streamlines, inadmissible
    transported vorticity) propagate as the corresponding exceptions.
    """
    config = config or SolverConfig()
    grid = base.grid
    v = lincomb(1.0, base.v0, 1.0, u)
    f0 = make_f0(data, v, c_min=base.c_min)
    cmap = CharacteristicMap(
        v,
        c_min=base.c_min,
        l_max=config.l_max,
        tol_per_length=config.trace_tol,
        upsample=config.theta_upsample,
    )
    tfield = cmap.transport_vector(f0)
    w = divcurl.solve(tfield.f, div_tol=config.div_tol_for(grid),
                      edge_tol=config.edge_tol)
    return w, cmap, tfield


def _head_inflow(data: InflowData, base: BaseFlow) -> CapScalarField:
    v0cap = cap_slice_vector(base.v0, "inflow").values
    p0cap = cap_slice_scalar(base.p0, "inflow").values
    head = data.g.values + 0.5 * np.sum(v0cap**2, axis=0) + p0cap
    return CapScalarField(base.grid, head, "inflow")


def _pressure_from_map(cmap: CharacteristicMap, v: VectorField,
                       data: InflowData, base: BaseFlow) -> ScalarField:
    head = cmap.transport_scalar(_head_inflow(data, base))
    speed2 = np.sum(v.to_cylindrical().values**2, axis=0)
    return ScalarField(base.grid, head.values - 0.5 * speed2)


def recover_pressure(v: VectorField, data: InflowData, base: BaseFlow,
                     config: SolverConfig | None = None) -> ScalarField:
    """Bernoulli-head pressure of v (traces fresh streamlines of v)."""
    config = config or SolverConfig()
    cmap = CharacteristicMap(
        v,
        c_min=base.c_min,
        l_max=config.l_max,
        tol_per_length=config.trace_tol,
        upsample=config.theta_upsample,
    )
    return _pressure_from_map(cmap, v, data, base)


def euler_residual(v: VectorField, p: ScalarField, flux: FluxData | None = None) -> dict:
    """Volume-L2 residuals of the steady Euler system for (v, p)."""
    grid = v.grid
    vc = v.to_cylindrical()
    advection = ops.directional_derivative(vc, vc)
    gradp = ops.grad(p).to_cartesian()
    momentum = VectorField(grid, advection.values + gradp.values, "cartesian")
    f = ops.curl(vc)
    vort = VectorField(
        grid,
        ops.directional_derivative(vc, f).values - ops.directional_derivative(f, vc).values,
        "cartesian",
    )
    out = {
        "momentum": ops.norm(momentum, "l2"),
        "div": ops.norm(ops.div(vc), "l2"),
        "vorticity": ops.norm(vort, "l2"),
    }
    if flux is not None:
        mism = max(
            float(np.max(np.abs(-vc.values[2, :-1, :, 0] - flux.phi_minus.values[:-1]))),
            float(np.max(np.abs(vc.values[2, :-1, :, -1] - flux.phi_plus.values[:-1]))),
            float(np.max(np.abs(vc.values[0, -1, :, :]))),
        )
        out["flux_mismatch"] = mism
    return out


def fixed_point_solve(config: SolverConfig, data: InflowData, base: BaseFlow,
                      flux: FluxData | None = None) -> FlowState:
    """Iterate the update map from u = 0 until the H1-proxy update norm
    drops below tol_fp.

    Raises NoConvergence when max_iter runs out while the last update
    ratio is still >= 1 (boundary data above the admissible size);
    hypothesis violations from the sweep propagate unchanged.
    """
    grid = base.grid
    u = VectorField.zeros(grid)
    history = []
    prev_delta = None
    converged = False
    last_map = None
    tdiag = {}

    for k in range(1, config.max_iter + 1):
        w, cmap, tfield = transport_reconstruct(u, data, base, config)
        last_map = cmap
        tdiag = {
            "max_jacobian": tfield.max_jacobian,
            "max_time": tfield.max_time,
            "max_path_length": float(np.max(tfield.path_length)),
            "max_ode_error": float(np.max(tfield.ode_error)),
        }
        u_new = lincomb(1.0 - config.omega, u, config.omega, w)
        delta = ops.norm(lincomb(1.0, u_new, -1.0, u), "h1")
        ratio = delta / prev_delta if (prev_delta is not None and prev_delta > 0) else None

        v_k = lincomb(1.0, base.v0, 1.0, u)
        p_k = _pressure_from_map(cmap, v_k, data, base)
        res_k = euler_residual(v_k, p_k)
        history.append(
            {
                "iter": k,
                "update_norm": delta,
                "ratio": ratio,
                "momentum_res": res_k["momentum"],
                "div_res": res_k["div"],
            }
        )
        u = u_new
        prev_delta = delta
        if delta < config.tol_fp:
            converged = True
            break

    if not converged:
        last_ratio = history[-1]["ratio"]
        last_update = history[-1]["update_norm"]
        first_update = history[0]["update_norm"]
        # ratio blips at the integrator noise floor are not divergence;
        # genuine non-contraction keeps the updates at their initial size
        if last_ratio is not None and last_ratio >= 1.0 and last_update >= 0.5 * first_update:
            raise NoConvergence(
                f"update ratio {last_ratio:.3f} >= 1 after {config.max_iter} iterations; "
                "the boundary data exceed the admissible size for contraction"
            )

    v = lincomb(1.0, base.v0, 1.0, u)
    # the last map belongs to the pre-update velocity; rebuild for the
    # final field so the recovered pressure matches v exactly
    final_map = CharacteristicMap(
        v, c_min=base.c_min, l_max=config.l_max,
        tol_per_length=config.trace_tol, upsample=config.theta_upsample,
    )
    p = _pressure_from_map(final_map, v, data, base)
    f = ops.curl(v.to_cylindrical())
    residuals = euler_residual(v, p, flux)
    return FlowState(
        v=v.to_cylindrical().assert_finite(),
        p=p.assert_finite(),
        f=f,
        u=u,
        converged=converged,
        iterations=len(history),
        history=history,
        residuals=residuals,
        transport_diagnostics=tdiag,
    )


# -- instrumentation ----------------------------------------------------


def data_difference_norms(d1: InflowData, d2: InflowData) -> tuple[float, float]:
    """(||h1 - h2||_L2 + ||grad_T(g1 - g2)||_L2,  ||g1 - g2||_L2) on the cap."""
    grid = d1.grid
    dh = ops.cap_norm(d1.h.values - d2.h.values, grid, "l2")
    dgt = ops.cap_norm(d1.grad_g_tangential() - d2.grad_g_tangential(), grid, "l2")
    dg = ops.cap_norm(d1.g.values - d2.g.values, grid, "l2")
    return dh + dgt, dg


def lipschitz_probe(config: SolverConfig, base: BaseFlow, pairs) -> dict:
    """Measured data-to-solution stability ratios over pairs of data.

    pairs is an iterable of (InflowData, InflowData); identical pairs are
    reported as skipped.  Returns per-pair ratios and their maxima (the
    empirical stability constants for velocity and pressure).
    """
    results = []
    for d1, d2 in pairs:
        den_v, dg = data_difference_norms(d1, d2)
        if den_v == 0.0 and dg == 0.0:
            results.append({"skipped": True})
            continue
        s1 = fixed_point_solve(config, d1, base)
        s2 = fixed_point_solve(config, d2, base)
        dv = ops.norm(lincomb(1.0, s1.v, -1.0, s2.v), "h1")
        dp = ops.norm(ScalarField(base.grid, s1.p.values - s2.p.values), "h1")
        results.append(
            {
                "skipped": False,
                "velocity_ratio": dv / den_v if den_v > 0 else np.inf,
                "pressure_ratio": dp / (den_v + dg),
            }
        )
    vr = [r["velocity_ratio"] for r in results if not r.get("skipped")]
    pr = [r["pressure_ratio"] for r in results if not r.get("skipped")]
    return {
        "pairs": results,
        "velocity_constant": max(vr) if vr else None,
        "pressure_constant": max(pr) if pr else None,
    }


def second_iterate_ratio(config: SolverConfig, data: InflowData, base: BaseFlow) -> float:
    """||B(u1) - u1|| / ||B(0)|| -- the contraction probe used for
    calibrating the admissible data size."""
    u0 = VectorField.zeros(base.grid)
    w1, _, _ = transport_reconstruct(u0, data, base, config)
    d1 = ops.norm(w1, "h1")
    if d1 == 0.0:
        return 0.0
    w2, _, _ = transport_reconstruct(w1, data, base, config)
    d2 = ops.norm(lincomb(1.0, w2, -1.0, w1), "h1")
    return d2 / d1


def calibrate_size_bound(config: SolverConfig, base: BaseFlow, data_builder,
                         target_ratio: float = 0.9, amp_lo: float = 1e-3,
                         amp_hi: float = 0.5, bisections: int = 12) -> dict:
    """Bisect the data amplitude until the second-iterate ratio crosses
    the target; returns the admissible size bound for the config.

    data_builder(amplitude) must return an InflowData family linear in
    amplitude.  Amplitudes whose sweep violates a runtime hypothesis
    count as beyond the bound.
    """

    def probe(amp: float) -> float:
        try:
            return second_iterate_ratio(config, data_builder(amp), base)
        except HypothesisViolation:
            return np.inf

    lo, hi = amp_lo, amp_hi
    rho_lo = probe(lo)
    if rho_lo >= target_ratio:
        return {"amplitude": lo, "size_bound": data_builder(lo).data_size,
                "ratio": rho_lo, "bracketed": False}
    rho_hi = probe(hi)
    grow = 0
    while rho_hi < target_ratio and grow < 12:
        lo, rho_lo = hi, rho_hi
        hi *= 2.0
        rho_hi = probe(hi)
        grow += 1
    if rho_hi < target_ratio:
        return {"amplitude": hi, "size_bound": data_builder(hi).data_size,
                "ratio": rho_hi, "bracketed": False}
    for _ in range(bisections):
        mid = np.sqrt(lo * hi)
        if probe(mid) < target_ratio:
            lo = mid
        else:
            hi = mid
    amp = lo
    return {"amplitude": amp, "size_bound": data_builder(amp).data_size,
            "ratio": probe(amp), "bracketed": True}
