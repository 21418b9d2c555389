"""Exception types raised across the package."""


class GaussMinmaxError(Exception):
    """Base class for all package errors."""


class NonOrthonormalInput(GaussMinmaxError, ValueError):
    pass


class NonUnitQuaternion(GaussMinmaxError, ValueError):
    pass


class GridTooCoarse(GaussMinmaxError, ValueError):
    pass


class BadParameter(GaussMinmaxError, ValueError):
    pass


class DegenerateMetric(GaussMinmaxError, ArithmeticError):
    pass


class DegenerateGaussMetric(GaussMinmaxError, ArithmeticError):
    pass


class AmbiguousDegree(GaussMinmaxError, ArithmeticError):
    pass


class NotMinimal(GaussMinmaxError, ValueError):
    pass


class BoundaryParameter(GaussMinmaxError, ValueError):
    pass


class NoUniqueProjection(GaussMinmaxError, ValueError):
    pass


class ChartOverflow(GaussMinmaxError, ValueError):
    pass


class StepRejected(GaussMinmaxError, RuntimeError):
    pass


class NoConvergence(GaussMinmaxError, RuntimeError):
    """Iteration cap reached; ``partial`` holds the last available result."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NotCritical(GaussMinmaxError, ValueError):
    pass


class BadEigenbasis(GaussMinmaxError, ValueError):
    pass


class BadLevel(GaussMinmaxError, ValueError):
    pass


class CurveCollapse(GaussMinmaxError, RuntimeError):
    """Curve shortening reached a point curve; ``curve`` is the last iterate."""

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve


class ConfigError(GaussMinmaxError, ValueError):
    pass
