"""Exception types raised across the package."""


class DimensionMismatch(ValueError):
    """Operands have incompatible shapes."""


class ConvergenceError(RuntimeError):
    """An inner iterative estimator hit its iteration cap."""


class AssumptionViolation(RuntimeError):
    """A checkable hypothesis of the method does not hold."""


class NumericalBreakdown(RuntimeError):
    """The iteration produced a non-finite value or a degenerate halfspace."""


class ConfigError(ValueError):
    """A configuration is malformed or inconsistent."""
