"""Integral curves of a velocity field through the cylinder.

Tracing runs in Cartesian coordinates (the cylindrical ODE is singular
on the axis) with the clamped fast interpolant for velocity samples.
The integrator is classical RK4 with step-doubling error control: a
full step is compared against two half steps and accepted when the
Richardson error estimate stays below tol_per_length * (step length).
Cap crossings (z = 0 backward, z = L forward) are located by bisecting
the substep size to |z - z_cap| <= 1e-10 * L.  Trajectories that leave
through the mantle by roundoff or discretization noise are projected
back onto r = R; seeds that start on the mantle stay pinned to it for
their whole life (a trajectory tangent to the wall never re-enters the
interior in the continuum).

Runtime hypothesis checks: sampled speed below the configured floor
raises StagnationDetected, accumulated arclength beyond the cap raises
LengthExceeded -- both signal that the velocity field left the regime
where every streamline runs cap to cap.

The ensemble tracer advances thousands of seeds in lockstep with
per-seed adaptive steps and records the accepted step sizes, so the
transport stage can re-integrate forward along the same time grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthExceeded, SolverFailure, StagnationDetected
from .fields import VectorField
from .grid import CylGrid
from .interpolation import FastFieldBatch, FastGeometry, velocity_batch

STATUS_RUNNING = 0
STATUS_DONE = 1
STATUS_STAGNATION = 2
STATUS_LENGTH = 3

BISECT_REL_TOL = 1e-10
SAFETY = 0.9
GROW_MAX = 5.0
SHRINK_MAX = 0.2
MAX_ROUNDS = 100000


@dataclass
class TraceSettings:
    tol_per_length: float = 1e-9
    l_max: float = np.inf
    min_speed: float = 0.0  # 0 disables the stagnation check
    dt_init: float = 0.1
    dt_max: float = np.inf
    record: bool = False


@dataclass
class Streamline:
    """One traced integral curve (public, single-seed API)."""

    seed: np.ndarray            # cylindrical (r, theta, z)
    direction: str              # 'forward' | 'backward'
    points: np.ndarray          # Cartesian samples, shape (n, 3)
    times: np.ndarray           # time along the curve, t >= 0
    arclengths: np.ndarray      # cumulative arclength
    terminal: str               # 'inflow' | 'outflow'
    length: float
    min_sampled_speed: float


@dataclass
class EnsembleResult:
    foot: np.ndarray            # (N, 3) Cartesian end points on the target cap
    times: np.ndarray           # (N,) total |time| per seed
    lengths: np.ndarray         # (N,) arclength per seed
    dts: np.ndarray             # (N, max_steps) accepted |dt| per step
    counts: np.ndarray          # (N,) number of accepted steps
    status: np.ndarray          # per-seed STATUS_* after the sweep
    min_speed_seen: float
    recorded: list = field(default_factory=list)


def _project_radius(x: np.ndarray, R: float, mask=None) -> None:
    """Pull points with hypot(x, y) > R back onto the mantle (in place)."""
    rho = np.hypot(x[:, 0], x[:, 1])
    out = rho > R
    if mask is not None:
        out = out | mask
    sel = out & (rho > 0)
    scale = R / rho[sel]
    x[sel, 0] *= scale
    x[sel, 1] *= scale


def _rk4_step(sample, x: np.ndarray, h: np.ndarray, k1: np.ndarray | None = None):
    """One RK4 step; returns (y, k1, dl) with dl the arclength increment
    from the RK4-weighted quadrature of the stage speeds.  k1 = sample(x)
    may be passed in when the caller already has it."""
    hh = h[:, None]
    if k1 is None:
        k1 = sample(x)
    k2 = sample(x + 0.5 * hh * k1)
    k3 = sample(x + 0.5 * hh * k2)
    k4 = sample(x + hh * k3)
    speeds = (
        np.linalg.norm(k1, axis=1)
        + 2 * np.linalg.norm(k2, axis=1)
        + 2 * np.linalg.norm(k3, axis=1)
        + np.linalg.norm(k4, axis=1)
    )
    return x + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), k1, np.abs(h) / 6.0 * speeds


def _locate_crossing(sample, xc, hc, z1, z_target, z_tol, backward):
    """Fraction s of the step at which z(s) hits the target cap.

    Illinois regula falsi on the substep fraction; z is monotone and
    nearly linear in s over one step, so this converges in a handful of
    RK4 evaluations.  Returns (s, y(s), dl(s))."""
    n = xc.shape[0]
    lo = np.zeros(n)
    z_lo = xc[:, 2] - z_target
    hi = np.ones(n)
    z_hi = z1 - z_target
    y = None
    dl = None
    s = hi.copy()
    for _ in range(40):
        denom = z_hi - z_lo
        s_new = hi - z_hi * (hi - lo) / np.where(np.abs(denom) > 0, denom, 1.0)
        s_new = np.clip(s_new, lo + 1e-4 * (hi - lo), hi - 1e-4 * (hi - lo))
        ym, _, dlm = _rk4_step(sample, xc, s_new * hc)
        zm = ym[:, 2] - z_target
        past = (zm < 0) if backward else (zm > 0)
        if y is None:
            y, dl, s = ym.copy(), dlm.copy(), s_new.copy()
        better = np.abs(zm) < np.abs(y[:, 2] - z_target)
        y = np.where(better[:, None], ym, y)
        dl = np.where(better, dlm, dl)
        s = np.where(better, s_new, s)
        # Illinois: halve the retained side's value to avoid stalling
        z_lo = np.where(past, z_lo, zm)
        lo = np.where(past, lo, s_new)
        stall = past
        z_hi = np.where(past, zm, 0.5 * z_hi)
        hi = np.where(past, s_new, hi)
        z_lo = np.where(stall, 0.5 * z_lo, z_lo)
        if np.all(np.abs(y[:, 2] - z_target) <= z_tol):
            break
    return s, y, dl


class EnsembleTracer:
    """Advance many seeds through one velocity field."""

    def __init__(self, v: VectorField, settings: TraceSettings, upsample: int = 8,
                 batch: FastFieldBatch | None = None):
        self.grid = v.grid
        self.settings = settings
        self.batch = batch if batch is not None else velocity_batch(v, upsample)

    def _sample_velocity(self, x: np.ndarray) -> np.ndarray:
        return self.batch.sample_cart(x)[:, :3]

    def trace(self, seeds_cart: np.ndarray, direction: str,
              pinned: np.ndarray | None = None) -> EnsembleResult:
        g = self.grid
        st = self.settings
        backward = direction == "backward"
        sgn = -1.0 if backward else 1.0
        z_target = 0.0 if backward else g.L

        x = np.array(seeds_cart, dtype=float)
        n = x.shape[0]
        pinned = np.zeros(n, dtype=bool) if pinned is None else pinned.copy()
        _project_radius(x, g.R, pinned)

        dt = np.full(n, st.dt_init)
        t = np.zeros(n)
        length = np.zeros(n)
        status = np.full(n, STATUS_RUNNING, dtype=np.int8)
        counts = np.zeros(n, dtype=np.int64)
        dts = np.zeros((n, 64))
        rejected_last = np.zeros(n, dtype=bool)
        min_speed_seen = np.inf
        z_tol = BISECT_REL_TOL * g.L
        recorded = [[x[0].copy()]] if st.record and n == 1 else []
        rec_t, rec_len = ([0.0], [0.0]) if st.record and n == 1 else (None, None)

        # seeds already on the target cap are finished immediately
        done0 = np.abs(x[:, 2] - z_target) <= z_tol
        status[done0] = STATUS_DONE

        for _round in range(MAX_ROUNDS):
            act = np.flatnonzero(status == STATUS_RUNNING)
            if act.size == 0:
                break
            xa = x[act]
            h = sgn * dt[act]

            y_full, k1, _ = _rk4_step(self._sample_velocity, xa, h)
            y_half, _, dl1 = _rk4_step(self._sample_velocity, xa, 0.5 * h, k1=k1)
            y2, _, dl2 = _rk4_step(self._sample_velocity, y_half, 0.5 * h)
            dl = dl1 + dl2
            err = np.linalg.norm(y2 - y_full, axis=1) / 15.0
            step_len = np.linalg.norm(y2 - xa, axis=1)
            tol_step = st.tol_per_length * np.maximum(step_len, 1e-30)
            accept = err <= tol_step

            speed = np.linalg.norm(k1, axis=1)
            min_speed_seen = min(min_speed_seen, float(speed.min()))
            if st.min_speed > 0.0:
                stag = speed < st.min_speed
                if np.any(stag):
                    status[act[stag]] = STATUS_STAGNATION
                    accept = accept & ~stag

            idx = act[accept]
            if idx.size:
                ynew = y2[accept]
                dla = dl[accept]
                crossed = (ynew[:, 2] < z_target - z_tol) if backward else (
                    ynew[:, 2] > z_target + z_tol
                )
                sub = np.ones(idx.size)
                if np.any(crossed):
                    s_c, y_c, dl_c = _locate_crossing(
                        self._sample_velocity,
                        xa[accept][crossed],
                        h[accept][crossed],
                        ynew[crossed][:, 2],
                        z_target,
                        z_tol,
                        backward,
                    )
                    ynew[crossed] = y_c
                    sub[crossed] = s_c
                    dla[crossed] = dl_c
                _project_radius(ynew, g.R, pinned[idx])
                length[idx] += dla
                t[idx] += sub * dt[idx]

                if np.max(counts[idx]) >= dts.shape[1] - 1:
                    dts = np.concatenate([dts, np.zeros_like(dts)], axis=1)
                dts[idx, counts[idx]] = sub * dt[idx]
                counts[idx] += 1
                x[idx] = ynew

                reached = crossed | (np.abs(ynew[:, 2] - z_target) <= z_tol)
                over = length[idx] > st.l_max
                status[idx[over]] = STATUS_LENGTH
                fin = reached & ~over
                fin_idx = idx[fin]
                status[fin_idx] = STATUS_DONE
                x[fin_idx, 2] = z_target

                if recorded:
                    recorded[0].append(x[0].copy())
                    rec_t.append(float(t[0]))
                    rec_len.append(float(length[0]))

            # step-size update; after a rejection never grow (avoids the
            # accept/reject ping-pong on nearly error-free stretches)
            run = status[act] == STATUS_RUNNING
            with np.errstate(divide="ignore"):
                fac = SAFETY * (tol_step / np.maximum(err, 1e-300)) ** 0.25
            fac = np.clip(np.where(err == 0.0, GROW_MAX, fac), SHRINK_MAX, GROW_MAX)
            fac = np.where(rejected_last[act] & accept, np.minimum(fac, 1.0), fac)
            dt[act[run]] = np.minimum(dt[act[run]] * fac[run], st.dt_max)
            rejected_last[act] = ~accept
            if np.any(dt[act[run]] < 1e-14 * g.L):
                raise SolverFailure("streamline step size underflow")
        else:
            raise SolverFailure("streamline tracing did not terminate")

        res = EnsembleResult(
            foot=x,
            times=t,
            lengths=length,
            dts=dts,
            counts=counts,
            status=status,
            min_speed_seen=float(min_speed_seen),
        )
        if recorded:
            res.recorded = [
                (np.array(recorded[0]), np.array(rec_t), np.array(rec_len))
            ]
        return res


def raise_for_status(status: np.ndarray, min_speed: float, l_max: float):
    if np.any(status == STATUS_STAGNATION):
        raise StagnationDetected(
            f"streamline speed fell below the floor {min_speed:.3e}; "
            "the velocity field violates the no-stagnation hypothesis"
        )
    if np.any(status == STATUS_LENGTH):
        raise LengthExceeded(
            f"a streamline exceeded the length cap {l_max:.3g}; this suggests a "
            "closed or near-stagnant integral curve"
        )


def default_length_cap(grid: CylGrid, v_max: float, c_min: float) -> float:
    return 10.0 * grid.L * (1.0 + v_max / c_min)


def trace(v: VectorField, seed, direction: str = "backward", *,
          min_speed: float = 0.0, l_max: float | None = None,
          tol_per_length: float = 1e-9, upsample: int = 8) -> Streamline:
    """Trace one integral curve from a cylindrical seed point.

    Backward traces end on the inflow cap, forward traces on the outflow
    cap; hypothesis violations raise StagnationDetected / LengthExceeded.
    """
    g = v.grid
    vmax = float(np.max(np.linalg.norm(v.to_cartesian().values, axis=0)))
    if l_max is None:
        vmin_ax = float(np.min(v.to_cylindrical().values[2]))
        if vmin_ax <= 0:
            raise StagnationDetected(
                f"velocity field has min axial component {vmin_ax:.3e} <= 0"
            )
        l_max = default_length_cap(g, vmax, vmin_ax)
    settings = TraceSettings(
        tol_per_length=tol_per_length,
        l_max=l_max,
        min_speed=min_speed,
        dt_init=0.1 * g.L / max(vmax, 1e-30),
        dt_max=0.25 * g.L / max(vmax, 1e-30) * 4.0,
        record=True,
    )
    seed = np.asarray(seed, dtype=float)
    x0 = np.array([[seed[0] * np.cos(seed[1]), seed[0] * np.sin(seed[1]), seed[2]]])
    pinned = np.array([seed[0] >= g.R * (1 - 1e-12)])
    tracer = EnsembleTracer(v, settings, upsample)
    res = tracer.trace(x0, direction, pinned)
    raise_for_status(res.status, min_speed, l_max)
    pts, times, lens = res.recorded[0]
    return Streamline(
        seed=seed,
        direction=direction,
        points=pts,
        times=times,
        arclengths=lens,
        terminal="inflow" if direction == "backward" else "outflow",
        length=float(res.lengths[0]),
        min_sampled_speed=res.min_speed_seen,
    )
