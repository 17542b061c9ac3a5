"""Exception types shared across the package.

The CLI maps these onto exit codes: config/usage problems exit 2,
data/I-O problems exit 3, violated numerical properties exit 1.
"""


class TdformerError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(TdformerError):
    """A transform length, level count, kernel or period is unusable."""


class ShapeError(TdformerError):
    """Operands have incompatible shapes."""


class DomainError(TdformerError):
    """An input lies outside an operation's numeric domain."""


class ConfigError(TdformerError):
    """A configuration value or combination is invalid."""


class DataError(TdformerError):
    """A dataset file is missing, malformed or empty."""


class GradientError(TdformerError):
    """A gradient block came back non-finite; training must stop."""
