"""Exception types shared across the package."""


class ChiralNetError(Exception):
    """Base class for errors raised by this package."""


class DegenerateParametersError(ChiralNetError, ValueError):
    """Physical parameters hit a pole or an indeterminate 0/0 combination."""


class ConfigError(ChiralNetError, ValueError):
    """Invalid or inconsistent run configuration."""


class NonFiniteGradientError(ChiralNetError):
    """A gradient coordinate evaluated to NaN or infinity.

    Carries the offending parameter key so the failing gate can be located.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
