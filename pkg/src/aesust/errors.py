"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Tensor shape violates an operation's contract."""


class NumericError(ArithmeticError):
    """Non-finite values where finite ones are required."""


class ArchiveError(ValueError):
    """Malformed or inconsistent tensor archive."""


class ImageFormatError(ValueError):
    """Unsupported or corrupt image stream."""


class ConfigError(ValueError):
    """Invalid training configuration file or value."""
