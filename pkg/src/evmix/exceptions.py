"""Exception types raised across the package."""


class EvmixError(Exception):
    """Base class for all package errors."""


class DomainError(EvmixError, ValueError):
    """An argument lies outside the domain of the operation."""


class EstimationError(EvmixError, RuntimeError):
    """An estimator could not produce a usable result from the data."""


class ConfigError(EvmixError, ValueError):
    """A configuration text or spec string could not be parsed.

    Attributes
    ----------
    key : str or None
        The offending key or token, when one can be named.
    """

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class InputError(EvmixError, ValueError):
    """An external data file could not be read.

    Attributes
    ----------
    line : int or None
        1-based line number of the first bad line.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
