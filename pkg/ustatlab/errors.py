"""Exception hierarchy shared by every ustatlab module."""


class UStatLabError(Exception):
    """Base class for all errors raised by ustatlab."""


class KernelError(UStatLabError, ValueError):
    """A kernel could not be built or evaluated."""


class SampleSizeError(UStatLabError, ValueError):
    """The sample is too small for the requested statistic."""


class EnumerationCapError(UStatLabError, ValueError):
    """Exact enumeration would exceed the configured tuple cap."""


class ProcessSpecError(UStatLabError, ValueError):
    """A process specification has invalid parameters."""


class ConfigError(UStatLabError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class NumericError(UStatLabError, ArithmeticError):
    """A computation produced a non-finite value or received degenerate input."""
