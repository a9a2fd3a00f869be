"""Exception types raised across the package."""


class GraphDPError(Exception):
    """Base class for all package errors."""


class NotInvertible(GraphDPError):
    """A filter matrix is singular or too ill-conditioned to invert."""


class NoUniformLowerBound(GraphDPError):
    """No positive lower bound on the smallest singular value holds over the class."""


class DimensionMismatch(GraphDPError, ValueError):
    pass


class InvalidCorrelation(GraphDPError, ValueError):
    pass


class SingularCovariance(GraphDPError):
    pass


class AlphaInfeasible(GraphDPError):
    """The Renyi order lies outside the range where the divergence is finite."""


class SupportMismatch(GraphDPError):
    """Two Gaussians live on different affine supports, so no finite privacy loss exists."""


class ConfigError(GraphDPError, ValueError):
    pass
