"""Exception hierarchy shared by every module."""


class LevelRateError(Exception):
    """Base class for all library errors."""


class InputDomainError(LevelRateError, ValueError):
    """Non-finite or otherwise invalid numeric input."""


class DimensionError(LevelRateError, ValueError):
    pass


class ParameterError(LevelRateError, ValueError):
    pass


class DataError(LevelRateError, ValueError):
    """Malformed dataset or label out of range."""


class ConfigError(LevelRateError, ValueError):
    pass


class NumericalError(LevelRateError, ArithmeticError):
    pass


class SamplingError(LevelRateError, ValueError):
    """Raised when a grid evaluation produces a non-finite value."""
