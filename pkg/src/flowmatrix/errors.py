"""Exception types shared across the library."""


class FlowMatrixError(Exception):
    """Base class for all library errors."""


class OutOfDomain(FlowMatrixError):
    """Time lies outside the schedule's domain."""


class SingularParameterization(FlowMatrixError):
    """The coefficient matrix is rank-deficient at the requested time."""


class NotFlowMatching(FlowMatrixError):
    """Operation requires a family with a velocity-style target."""


class NotDdpm(FlowMatrixError):
    """Operation requires one of the DDPM families."""


class TimeOrder(FlowMatrixError):
    """Reverse steps must move backwards in time."""


class DegenerateTarget(FlowMatrixError):
    """Both target coefficients vanish; the correlation is undefined."""


class ConfigError(FlowMatrixError):
    """Invalid or missing run configuration."""
