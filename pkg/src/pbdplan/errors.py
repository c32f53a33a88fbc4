"""Exception types raised across the package."""


class PlanningError(Exception):
    """Base class for every error raised by pbdplan."""


class SingularCovariance(PlanningError):
    pass


class NumericalFailure(PlanningError):
    pass


class UnsupportedOrder(PlanningError):
    pass


class DimensionError(PlanningError, ValueError):
    pass


class LinkEvaluationError(PlanningError):
    pass


class GeneratorContractViolation(PlanningError):
    pass


class UnsupportedDomain(PlanningError):
    pass


class InvalidInput(PlanningError, ValueError):
    pass


class InvalidPose(PlanningError, ValueError):
    pass


class ConfigError(PlanningError, ValueError):
    """Malformed scenario or experiment file."""
