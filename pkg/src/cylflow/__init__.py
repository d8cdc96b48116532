"""Steady rotational Euler flow through a straight circular pipe.

Construct an irrotational base flow from cap flux data, then iterate
transport-of-vorticity / velocity-reconstruction sweeps to the rotational
solution prescribed by inflow data (g, h), with every hypothesis of the
construction checked at runtime.
"""

from .base_flow import BaseFlow, FluxData, assemble_base, build_base_flow, solve_potential
from .boundary_data import InflowData, make_f0
from .boundary_data import validate as validate_inflow_data
from .columnar import ColumnarOracle
from .config import RunConfig, load_config, random_inflow_data
from .divcurl import validate_f
from .divcurl import solve as solve_divcurl
from .divcurl import estimates_probe as divcurl_estimates_probe
from .errors import (
    CompatibilityWarning,
    ConfigError,
    CylflowError,
    DegenerateInflow,
    GridMismatch,
    HypothesisViolation,
    IncompatibleData,
    InvalidGrid,
    IoError,
    LengthExceeded,
    NoConvergence,
    OutOfDomain,
    ParseError,
    SolverFailure,
    StagnationDetected,
    ValidationError,
    ValidationFailure,
)
from .fields import (
    CapScalarField,
    CapVectorField,
    MantleScalarField,
    ScalarField,
    VectorField,
    cap_slice_scalar,
    cap_slice_vector,
    lincomb,
)
from .grid import CylGrid, build_grid
from .interpolation import interpolate
from .operators import curl, div, grad, norm, rel_l2_error
from .poisson import BcSpec, CompatReport, FaceBc, check_compatibility
from .poisson import solve as solve_poisson
from .solver import (
    FlowState,
    SolverConfig,
    calibrate_size_bound,
    euler_residual,
    fixed_point_solve,
    lipschitz_probe,
    recover_pressure,
    transport_reconstruct,
)
from .streamlines import Streamline, trace
from .transport import (
    CharacteristicMap,
    TransportField,
    solve_transport,
    transport_scalar,
)
from .transport import estimates_probe as transport_estimates_probe

__version__ = "0.1.0"
