"""Run configuration: flat key-value files with sections (INI).

Example:

    [geometry]
    radius = 1.0
    length = 2.0
    n_r = 17
    n_theta = 16
    n_z = 33

    [flux]
    profile = uniform        ; uniform | radial
    magnitude = 1.0
    bump = 0.0               ; radial profile: +- m*(1 + bump*(1-(r/R)^2)^2)

    [inflow]
    profile = columnar       ; zero | columnar | bump | random
    amplitude = 0.05
    seed = 0                 ; random profile only

    [solver]
    tol_fp = 1e-8
    max_iter = 40
    omega = 1.0
    ; k1 = 1.5              ; admissible data-size bound (calibrate-k1)
    trace_tol = 1e-9
    theta_upsample = 8
    ; div_tol = 1e-6
    edge_tol = 1e-6
    ; l_max = 40.0

    [output]
    directory = out
    formats = csv,vtk

Unknown sections or keys are rejected (ParseError); values outside their
admissible ranges raise ValidationError.  The only environment override
is CYLFLOW_OUTPUT_DIR for the output directory.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .base_flow import FluxData
from .boundary_data import InflowData
from .columnar import ColumnarOracle
from .errors import InvalidGrid, ParseError, ValidationError
from .fields import CapScalarField
from .grid import CylGrid, build_grid
from .solver import SolverConfig

_SCHEMA = {
    "geometry": {"radius", "length", "n_r", "n_theta", "n_z"},
    "flux": {"profile", "magnitude", "bump"},
    "inflow": {"profile", "amplitude", "seed"},
    "solver": {"tol_fp", "max_iter", "omega", "k1", "trace_tol",
               "theta_upsample", "div_tol", "edge_tol", "l_max"},
    "output": {"directory", "formats"},
}

FLUX_PROFILES = ("uniform", "radial")
INFLOW_PROFILES = ("zero", "columnar", "bump", "random")
EXPORT_FORMATS = ("csv", "vtk")


@dataclass
class RunConfig:
    radius: float = 1.0
    length: float = 2.0
    n_r: int = 17
    n_theta: int = 16
    n_z: int = 33
    flux_profile: str = "uniform"
    flux_magnitude: float = 1.0
    flux_bump: float = 0.0
    inflow_profile: str = "zero"
    amplitude: float = 0.05
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_dir: str = "out"
    formats: tuple = ("csv",)

    def validate(self) -> "RunConfig":
        if not (self.radius > 0 and np.isfinite(self.radius)):
            raise ValidationError(f"radius must be positive, got {self.radius}")
        if not (self.length > 0 and np.isfinite(self.length)):
            raise ValidationError(f"length must be positive, got {self.length}")
        if self.flux_profile not in FLUX_PROFILES:
            raise ValidationError(f"unknown flux profile {self.flux_profile!r}")
        if self.inflow_profile not in INFLOW_PROFILES:
            raise ValidationError(f"unknown inflow profile {self.inflow_profile!r}")
        if not np.isfinite(self.amplitude):
            raise ValidationError("inflow amplitude must be finite")
        if not np.isfinite(self.flux_magnitude) or self.flux_magnitude <= 0:
            raise ValidationError("flux magnitude must be positive and finite")
        for fmt in self.formats:
            if fmt not in EXPORT_FORMATS:
                raise ValidationError(f"unknown export format {fmt!r}")
        try:
            self.build_grid()
        except InvalidGrid as exc:
            raise ValidationError(str(exc)) from exc
        return self

    # -- builders ------------------------------------------------------

    def build_grid(self) -> CylGrid:
        return build_grid(self.radius, self.length, self.n_r, self.n_theta, self.n_z)

    def build_flux(self, grid: CylGrid) -> FluxData:
        m = self.flux_magnitude
        if self.flux_profile == "uniform":
            return FluxData.uniform(grid, m)
        b = self.flux_bump

        def profile(r, t):
            return m * (1.0 + b * (1.0 - (r / grid.R) ** 2) ** 2) + 0 * t

        return FluxData(
            CapScalarField.from_function(grid, lambda r, t: -profile(r, t), "inflow"),
            CapScalarField.from_function(grid, profile, "outflow"),
        )

    def oracle(self) -> ColumnarOracle:
        return ColumnarOracle(R=self.radius, L=self.length,
                              amplitude=self.amplitude, axial=self.flux_magnitude)

    def build_inflow_data(self, grid: CylGrid) -> InflowData:
        if self.inflow_profile == "zero":
            return InflowData.zero(grid)
        if self.inflow_profile == "columnar":
            return self.oracle().inflow_data(grid)
        if self.inflow_profile == "bump":
            h = CapScalarField.from_function(
                grid, lambda r, t: self.amplitude * (1 - (r / grid.R) ** 2) ** 2 + 0 * t
            )
            return InflowData(g=CapScalarField.zeros(grid), h=h)
        return random_inflow_data(grid, self.amplitude, np.random.default_rng(self.seed))


def random_inflow_data(grid: CylGrid, amplitude: float, rng) -> InflowData:
    """Smooth admissible (g, h) with a few low azimuthal modes.

    Every radial factor carries (1 - (r/R)^2)^2 so the data and their
    tangential gradients vanish on the edge circle, and r^m factors keep
    the m-th mode regular on the axis.
    """
    rho = (grid.r / grid.R)[:, None]
    th = grid.theta[None, :]
    flat = (1.0 - rho**2) ** 2

    def sample_field():
        c = rng.uniform(-1.0, 1.0, size=6)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
        return (
            c[0] * flat
            + c[1] * rho**2 * flat
            + c[2] * rho * flat * np.cos(th + phase[0])
            + c[3] * rho**2 * flat * np.cos(2 * th + phase[1])
        )

    h = CapScalarField(grid, amplitude * sample_field(), "inflow")
    g = CapScalarField(grid, amplitude * grid.R * sample_field(), "inflow")
    return InflowData(g=g, h=h)


def _get(parser, section, key, conv, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ParseError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def load_config(path: str) -> RunConfig:
    """Parse and validate a run-configuration file.

    Raises ParseError (missing file, syntax, unknown keys) or
    ValidationError (inadmissible values).
    """
    if not os.path.exists(path):
        raise ParseError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (configparser.Error, OSError) as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ParseError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ParseError(f"unknown key {key!r} in section [{section}]")

    cfg = RunConfig()
    cfg.radius = _get(parser, "geometry", "radius", float, cfg.radius)
    cfg.length = _get(parser, "geometry", "length", float, cfg.length)
    cfg.n_r = _get(parser, "geometry", "n_r", int, cfg.n_r)
    cfg.n_theta = _get(parser, "geometry", "n_theta", int, cfg.n_theta)
    cfg.n_z = _get(parser, "geometry", "n_z", int, cfg.n_z)
    cfg.flux_profile = _get(parser, "flux", "profile", str, cfg.flux_profile)
    cfg.flux_magnitude = _get(parser, "flux", "magnitude", float, cfg.flux_magnitude)
    cfg.flux_bump = _get(parser, "flux", "bump", float, cfg.flux_bump)
    cfg.inflow_profile = _get(parser, "inflow", "profile", str, cfg.inflow_profile)
    cfg.amplitude = _get(parser, "inflow", "amplitude", float, cfg.amplitude)
    cfg.seed = _get(parser, "inflow", "seed", int, cfg.seed)

    sc = SolverConfig()
    sc.tol_fp = _get(parser, "solver", "tol_fp", float, sc.tol_fp)
    sc.max_iter = _get(parser, "solver", "max_iter", int, sc.max_iter)
    sc.omega = _get(parser, "solver", "omega", float, sc.omega)
    sc.k1 = _get(parser, "solver", "k1", float, sc.k1)
    sc.trace_tol = _get(parser, "solver", "trace_tol", float, sc.trace_tol)
    sc.theta_upsample = _get(parser, "solver", "theta_upsample", int, sc.theta_upsample)
    sc.div_tol = _get(parser, "solver", "div_tol", float, sc.div_tol)
    sc.edge_tol = _get(parser, "solver", "edge_tol", float, sc.edge_tol)
    sc.l_max = _get(parser, "solver", "l_max", float, sc.l_max)
    try:
        SolverConfig(tol_fp=sc.tol_fp, max_iter=sc.max_iter, omega=sc.omega)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    cfg.solver = sc

    cfg.output_dir = os.environ.get(
        "CYLFLOW_OUTPUT_DIR", _get(parser, "output", "directory", str, cfg.output_dir)
    )
    formats = _get(parser, "output", "formats", str, ",".join(cfg.formats))
    cfg.formats = tuple(f.strip() for f in formats.split(",") if f.strip())
    return cfg.validate()
