"""Exception hierarchy shared by every module in the package."""


class ScrnError(Exception):
    """Base class for all domain errors raised by :mod:`scrn`."""


class DimensionMismatch(ScrnError, ValueError):
    pass


class EmptySet(ScrnError, ValueError):
    pass


class SignConstraintViolated(ScrnError, ValueError):
    pass


class ParseError(ScrnError, ValueError):
    pass


class ConfigError(ScrnError, ValueError):
    pass


class EmptyClass(ConfigError):
    pass


class GenerationFailed(ScrnError, RuntimeError):
    pass


class NotConvexlySeparable(ScrnError):
    """A negative point lies (within tolerance) inside the positive hull.

    ``point_index`` indexes the offending negative point and ``distance``
    is its hull distance.
    """

    def __init__(self, message, point_index=None, point=None, distance=None):
        super().__init__(message)
        self.point_index = point_index
        self.point = point
        self.distance = distance


class NotPairwiseMutuallyConvexSeparable(ScrnError):
    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NotDisjoint(ScrnError):
    pass


class DegenerateGamma(ScrnError):
    pass


class ModelDoesNotSeparate(ScrnError):
    def __init__(self, message, point_index=None, label=None, value=None):
        super().__init__(message)
        self.point_index = point_index
        self.label = label
        self.value = value


class DescentViolation(ScrnError, RuntimeError):
    pass


class NonFinite(ScrnError, FloatingPointError):
    pass
