"""Command-line front end.

Subcommands:

    cylflow run <config>                 full solve + exports + report
    cylflow verify <config>              invariant suite on the configured grid
    cylflow calibrate-k1 <config>        bisect the admissible data-size bound
    cylflow probe-lipschitz <config> N   stability ratios over N random data pairs

Exit codes: 0 success/converged, 2 no convergence, 3 hypothesis or
invariant violation, 4 configuration error, 5 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings

import numpy as np

from . import divcurl, export, operators as ops, solver, transport
from .base_flow import build_base_flow
from .boundary_data import make_f0, validate as validate_inflow
from .config import RunConfig, load_config, random_inflow_data
from .errors import (
    CompatibilityWarning,
    ConfigError,
    CylflowError,
    HypothesisViolation,
    IncompatibleData,
    IoError,
    NoConvergence,
)
from .fields import ScalarField, VectorField, lincomb

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_HYPOTHESIS = 3
EXIT_CONFIG = 4
EXIT_IO = 5


def _timed(timings, name, fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    timings[name] = time.perf_counter() - t0
    return out


def run(cfg: RunConfig) -> int:
    timings = {}
    warnings_seen = []
    grid = cfg.build_grid()
    flux = cfg.build_flux(grid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CompatibilityWarning)
        base = _timed(timings, "base_flow", build_base_flow, flux)
        warnings_seen += [str(w.message) for w in caught]
    data = cfg.build_inflow_data(grid)
    inflow_report = validate_inflow(data, cfg.solver.k1)

    state = _timed(timings, "fixed_point", solver.fixed_point_solve,
                   cfg.solver, data, base, flux)

    # measured stability constants on the converged fields
    f0 = make_f0(data, state.v, c_min=base.c_min)
    tprobe = transport.estimates_probe(state.f, f0)
    dprobe = divcurl.estimates_probe(state.u, state.f)

    report = {
        "grid": {"radius": grid.R, "length": grid.L,
                 "n_r": grid.n_r, "n_theta": grid.n_theta, "n_z": grid.n_z},
        "converged": state.converged,
        "iterations": state.iterations,
        "history": state.history,
        "residuals": state.residuals,
        "inflow_data": {
            "size": inflow_report.data_size,
            "size_bound": inflow_report.size_bound,
            "within_bound": inflow_report.within_bound,
            "edge_violation": inflow_report.edge_violation,
            "edge_ok": inflow_report.edge_ok,
        },
        "transport_probe": tprobe,
        "divcurl_probe": dprobe,
        "transport_diagnostics": state.transport_diagnostics,
        "hypothesis_checks": {
            "base_flow_c_min": base.c_min,
            "warnings": warnings_seen,
        },
        "timings": timings,
    }

    if cfg.inflow_profile == "columnar":
        orc = cfg.oracle()
        vex = orc.velocity(grid)
        pex = orc.pressure_field(grid)
        report["oracle_comparison"] = {
            "velocity_rel_l2": ops.rel_l2_error(state.v, vex),
            "pressure_max_abs": float(np.max(np.abs(state.p.values - pex.values))),
            "swirl_amplitude": cfg.amplitude,
        }

    os.makedirs(cfg.output_dir, exist_ok=True)
    for fmt in cfg.formats:
        export.export_fields(state, fmt, os.path.join(cfg.output_dir, f"fields.{fmt}"))
    export.export_history_csv(state.history, os.path.join(cfg.output_dir, "history.csv"))
    export.write_report(report, os.path.join(cfg.output_dir, "report.json"))

    print(f"converged: {state.converged} after {state.iterations} iterations")
    for key, val in state.residuals.items():
        print(f"  residual {key}: {val:.3e}")
    if "oracle_comparison" in report:
        oc = report["oracle_comparison"]
        print(f"  oracle velocity rel-L2 error: {oc['velocity_rel_l2']:.3e}")
    print(f"outputs written to {cfg.output_dir}/")
    return EXIT_OK if state.converged else EXIT_NO_CONVERGENCE


def verify(cfg: RunConfig) -> int:
    """Fast invariant suite on the configured grid; one line per check."""
    grid = cfg.build_grid()
    rng = np.random.default_rng(7)
    h2 = (max(grid.dr, grid.dz) / min(grid.R, grid.L)) ** 2
    checks = []

    def check(name, value, tol):
        checks.append((name, value, tol, value <= tol))

    F = VectorField.from_function(
        grid,
        lambda r, t, z: (
            r * (grid.R - r) * np.cos(t) * np.sin(np.pi * z / grid.L),
            r * (grid.R - r) + 0 * t + 0 * z,
            np.cos(np.pi * z / grid.L) * (1 + 0.3 * r * np.cos(t)),
        ),
    )
    rt = F.to_cartesian().to_cylindrical()
    check("frame round-trip", float(np.max(np.abs(rt.values - F.values))), 1e-13)
    check("div(curl(F)) small", ops.norm(ops.div(ops.curl(F)), "l2"), 50 * h2)
    s = ScalarField.from_function(grid, lambda r, t, z: np.exp(0.3 * r * np.cos(t)) * z)
    check("curl(grad(s)) small", ops.norm(ops.curl(ops.grad(s)), "l2"), 50 * h2)
    alpha = float(rng.uniform(0.5, 2.0))
    n1 = ops.norm(VectorField(grid, alpha * F.values), "l2")
    check("norm homogeneity", abs(n1 - alpha * ops.norm(F, "l2")) / n1, 1e-13)

    flux = cfg.build_flux(grid)
    base = build_base_flow(flux)
    check("base flow curl(v0)", ops.norm(ops.curl(base.v0), "l2"), 50 * h2)
    res = solver.euler_residual(base.v0, base.p0, flux)
    check("base flow momentum residual", res["momentum"], 50 * h2)
    check("base flow div residual", res["div"], 50 * h2)
    check("base flow flux mismatch", res["flux_mismatch"], 50 * h2)

    f = VectorField.from_function(
        grid, lambda r, t, z: (0 * r, 0 * r + 0 * t + 0 * z, 2 * grid.R - 3 * r)
    )
    w = divcurl.solve(f)
    wex = VectorField.from_function(
        grid, lambda r, t, z: (0 * r, r * (grid.R - r) + 0 * t + 0 * z, 0 * r)
    )
    check("div-curl analytic pair", ops.rel_l2_error(w, wex), 1e-8)
    check("div-curl div(w)", ops.norm(ops.div(w), "l2"), 50 * h2)

    ok = True
    for name, value, tol, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {value:.3e} (tol {tol:.1e})")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def calibrate(cfg: RunConfig) -> int:
    grid = cfg.build_grid()
    base = build_base_flow(cfg.build_flux(grid))
    orc = cfg.oracle()

    def builder(amplitude):
        o = type(orc)(R=orc.R, L=orc.L, amplitude=amplitude, axial=orc.axial)
        return o.inflow_data(grid)

    result = solver.calibrate_size_bound(cfg.solver, base, builder)
    print(f"admissible data-size bound k1 = {result['size_bound']:.6g}")
    print(f"  at swirl amplitude {result['amplitude']:.6g} "
          f"(second-iterate ratio {result['ratio']:.3f}, bracketed={result['bracketed']})")
    os.makedirs(cfg.output_dir, exist_ok=True)
    export.write_report(result, os.path.join(cfg.output_dir, "calibration.json"))
    print(f"written to {cfg.output_dir}/calibration.json")
    return EXIT_OK


def probe_lipschitz(cfg: RunConfig, n_pairs: int) -> int:
    grid = cfg.build_grid()
    base = build_base_flow(cfg.build_flux(grid))
    rng = np.random.default_rng(cfg.seed)
    pairs = [
        (random_inflow_data(grid, cfg.amplitude, rng),
         random_inflow_data(grid, cfg.amplitude, rng))
        for _ in range(n_pairs)
    ]
    result = solver.lipschitz_probe(cfg.solver, base, pairs)
    for i, row in enumerate(result["pairs"]):
        if row.get("skipped"):
            print(f"pair {i}: skipped (identical data)")
        else:
            print(f"pair {i}: velocity ratio {row['velocity_ratio']:.4g}  "
                  f"pressure ratio {row['pressure_ratio']:.4g}")
    print(f"empirical constants: velocity {result['velocity_constant']:.4g}  "
          f"pressure {result['pressure_constant']:.4g}")
    os.makedirs(cfg.output_dir, exist_ok=True)
    export.write_report(result, os.path.join(cfg.output_dir, "lipschitz.json"))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cylflow",
        description="Steady rotational Euler flow through a straight circular pipe.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "solve the configured problem and export fields/report"),
        ("verify", "run the invariant suite on the configured grid"),
        ("calibrate-k1", "bisect the admissible boundary-data size bound"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="path to the run-configuration file")
    p = sub.add_parser("probe-lipschitz", help="measure data-to-solution stability ratios")
    p.add_argument("config", help="path to the run-configuration file")
    p.add_argument("n_pairs", type=int, help="number of random data pairs")

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            return run(cfg)
        if args.command == "verify":
            return verify(cfg)
        if args.command == "calibrate-k1":
            return calibrate(cfg)
        return probe_lipschitz(cfg, args.n_pairs)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (HypothesisViolation, IncompatibleData) as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except IoError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CylflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
