"""Preconditioned projective splitting for nonlinear saddle-point problems."""
from .core import LinearMap, PrimalDualPoint, operator_norm
from .coupling import Coupling
from .exceptions import AssumptionViolation, ConfigError, ConvergenceError, DimensionMismatch, NumericalBreakdown
from .functions import ProxFunction, resolvent
from .preconditioner import ConstantsReport, PreconditionerSpec, constants, warped_resolvent
from .problems import ProblemInstance
from .solver import Halfspace, SolverConfig, SolverState, solve
from .trace import IterateTrace, TraceRow

__all__ = [
    "LinearMap", "PrimalDualPoint", "operator_norm", "Coupling", "ProxFunction", "resolvent",
    "ConstantsReport", "PreconditionerSpec", "constants", "warped_resolvent", "ProblemInstance",
    "Halfspace", "SolverConfig", "SolverState", "solve", "IterateTrace", "TraceRow",
    "AssumptionViolation", "ConfigError", "ConvergenceError", "DimensionMismatch", "NumericalBreakdown",
]
