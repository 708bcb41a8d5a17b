"""Exception types raised across the package."""


class SuperLiouvilleError(Exception):
    """Base class for all package errors."""


class GridTooSmall(SuperLiouvilleError, ValueError):
    pass


class OutOfDomain(SuperLiouvilleError, ValueError):
    """A transformed node falls outside the source grid."""


class SingularPoint(SuperLiouvilleError, ValueError):
    """A node lies inside the excluded disk around the inversion centre."""


class InvalidSpinDirection(SuperLiouvilleError, ValueError):
    pass


class NonConstantCurvature(SuperLiouvilleError, ValueError):
    pass


class NotASolution(SuperLiouvilleError, ValueError):
    """The pair fails the residual gate required by a diagnostic."""


class EmptyAnnulus(SuperLiouvilleError, ValueError):
    pass


class BallOutsideGrid(SuperLiouvilleError, ValueError):
    pass


class InvalidThreshold(SuperLiouvilleError, ValueError):
    pass


class NoConvergence(SuperLiouvilleError, RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class LinearSolveFailure(SuperLiouvilleError, RuntimeError):
    pass


class ConfigError(SuperLiouvilleError, ValueError):
    pass
