class WvfuseError(Exception):
    """Base class for library errors."""


class InputError(WvfuseError, ValueError):
    """Invalid user input: shapes, parameter ranges, malformed files."""


class DegenerateCovarianceError(WvfuseError, ArithmeticError):
    """A scale covariance matrix is singular or not positive definite."""
