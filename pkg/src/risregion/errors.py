"""Exception hierarchy shared by all modules."""


class RisRegionError(Exception):
    """Base class for package errors."""


class ConfigurationError(RisRegionError):
    """Inconsistent dimensions or an invalid scenario/config."""


class ValidationError(RisRegionError, ValueError):
    """A parameter is outside its admissible range."""


class ConditioningError(RisRegionError, ArithmeticError):
    """A matrix that must be positive definite is not (numerically)."""


class ConstraintViolationError(RisRegionError):
    """A rate allocation or covariance violates its feasibility constraints."""


class SolverError(RisRegionError):
    """An inner solve failed; carries the outer iteration index when known."""

    def __init__(self, message, iteration=None):
        super().__init__(message if iteration is None else f"iteration {iteration}: {message}")
        self.iteration = iteration
