"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor shapes or dimensions are incompatible with an operation."""


class ConfigError(ValueError):
    """A parameter, schedule, or configuration value is invalid."""


class NumericError(ArithmeticError):
    """A computation produced or encountered non-finite values."""


class FormatError(ValueError):
    """An on-disk artifact does not match its declared binary layout."""
