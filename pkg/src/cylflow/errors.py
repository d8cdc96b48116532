"""Exception types shared across the library.

The hierarchy mirrors how failures are reported at the command line:
configuration problems, hypothesis violations detected at runtime
(stagnation, runaway streamlines, inadmissible data), and plain solver
failures are distinguishable by exception class.
"""


class CylflowError(Exception):
    """Base class for all library errors."""


class InvalidGrid(CylflowError):
    """Grid parameters violate the domain invariants."""


class GridMismatch(CylflowError):
    """Operands live on different grids."""


class OutOfDomain(CylflowError):
    """Query point lies outside the closed cylinder beyond tolerance."""


class SolverFailure(CylflowError):
    """A linear or nonlinear solve did not produce a usable result."""


class IncompatibleData(CylflowError):
    """Data violate a solvability condition (e.g. net flux imbalance for
    an all-Neumann potential problem)."""


class HypothesisViolation(CylflowError):
    """Runtime check found the flow outside the regime where the
    construction is valid."""


class StagnationDetected(HypothesisViolation):
    """Speed (or axial velocity) dropped below the admissible floor, so
    streamlines are no longer well defined characteristics."""


class LengthExceeded(HypothesisViolation):
    """A streamline exceeded the configured length cap, suggesting a
    closed or stagnating integral curve."""


class DegenerateInflow(HypothesisViolation):
    """|v . n| fell below the admissible floor on the inflow cap, so the
    inflow vorticity datum is not well defined."""


class ValidationFailure(HypothesisViolation):
    """A field handed to a solver fails that solver's admissibility
    checks (divergence residual, edge-tangential traces, ...)."""


class NoConvergence(CylflowError):
    """Fixed-point iteration exhausted max_iter while the update ratio
    was still >= 1; the boundary data are likely too large."""


class ConfigError(CylflowError):
    """Base class for run-configuration problems."""


class ParseError(ConfigError):
    """Configuration file is malformed or contains unknown keys."""


class ValidationError(ConfigError):
    """Configuration parsed but the values are inadmissible."""


class IoError(CylflowError):
    """Export or report writing failed."""


class CompatibilityWarning(UserWarning):
    """Boundary data violate an edge compatibility condition; the solve
    proceeds but accuracy degrades near the edge circles."""
