"""Field and report export: CSV, legacy VTK, iteration history, JSON.

The CSV layout is one node per row in (r outer, theta, z inner) order
with columns

    r,theta,z,vr,vtheta,vz,p,fr,ftheta,fz

printed with 17 significant digits, which round-trips float64 exactly;
identical states produce byte-identical files.  The VTK file is a
legacy-ASCII STRUCTURED_GRID with point data arrays velocity (Cartesian
vectors), pressure and vorticity (Cartesian vectors).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import IoError
from .grid import CylGrid

FLOAT_FMT = "%.17g"


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def export_csv(state, path: str) -> None:
    """Write velocity (cylindrical), pressure and vorticity per node."""
    grid: CylGrid = state.v.grid
    v = state.v.to_cylindrical().values
    f = state.f.to_cylindrical().values
    p = state.p.values
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("r,theta,z,vr,vtheta,vz,p,fr,ftheta,fz\n")
            for i in range(grid.n_r):
                for j in range(grid.n_theta):
                    for k in range(grid.n_z):
                        row = (
                            grid.r[i], grid.theta[j], grid.z[k],
                            v[0, i, j, k], v[1, i, j, k], v[2, i, j, k],
                            p[i, j, k],
                            f[0, i, j, k], f[1, i, j, k], f[2, i, j, k],
                        )
                        fh.write(",".join(_fmt(x) for x in row) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write CSV to {path}: {exc}") from exc


def parse_csv(path: str):
    """Read back an export_csv file; returns (header, array of rows)."""
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",")
    except OSError as exc:
        raise IoError(f"cannot read CSV from {path}: {exc}") from exc
    return header, np.atleast_2d(data)


def export_vtk(state, path: str) -> None:
    """Legacy-ASCII structured grid with velocity/pressure/vorticity."""
    grid: CylGrid = state.v.grid
    vcart = state.v.to_cartesian().values
    fcart = state.f.to_cartesian().values
    p = state.p.values
    r3, t3, z3 = np.broadcast_arrays(*grid.mesh())
    x = r3 * np.cos(t3)
    y = r3 * np.sin(t3)

    def point_lines(arrs):
        # VTK structured order: first dimension fastest
        lines = []
        for k in range(grid.n_z):
            for j in range(grid.n_theta):
                for i in range(grid.n_r):
                    lines.append(" ".join(_fmt(a[i, j, k]) for a in arrs))
        return lines

    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("steady rotational pipe flow\n")
            fh.write("ASCII\n")
            fh.write("DATASET STRUCTURED_GRID\n")
            fh.write(f"DIMENSIONS {grid.n_r} {grid.n_theta} {grid.n_z}\n")
            fh.write(f"POINTS {grid.n_nodes} double\n")
            fh.write("\n".join(point_lines([x, y, z3])) + "\n")
            fh.write(f"POINT_DATA {grid.n_nodes}\n")
            fh.write("VECTORS velocity double\n")
            fh.write("\n".join(point_lines(list(vcart))) + "\n")
            fh.write("SCALARS pressure double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            fh.write("\n".join(point_lines([p])) + "\n")
            fh.write("VECTORS vorticity double\n")
            fh.write("\n".join(point_lines(list(fcart))) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write VTK to {path}: {exc}") from exc


def export_history_csv(history, path: str) -> None:
    """Per-iteration convergence record."""
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("iter,update_norm,ratio,momentum_res,div_res\n")
            for row in history:
                ratio = row["ratio"]
                fh.write(
                    ",".join(
                        [
                            str(row["iter"]),
                            _fmt(row["update_norm"]),
                            _fmt(ratio) if ratio is not None else "nan",
                            _fmt(row["momentum_res"]),
                            _fmt(row["div_res"]),
                        ]
                    )
                    + "\n"
                )
    except OSError as exc:
        raise IoError(f"cannot write history to {path}: {exc}") from exc


def export_fields(state, fmt: str, path: str) -> None:
    """Dispatch on format ('csv' | 'vtk')."""
    if fmt == "csv":
        export_csv(state, path)
    elif fmt == "vtk":
        export_vtk(state, path)
    else:
        raise IoError(f"unknown export format {fmt!r}")


def write_report(report: dict, path: str) -> None:
    def default(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"cannot serialize {type(o)}")

    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=default)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write report to {path}: {exc}") from exc
