"""Exception hierarchy shared across the package."""


class CValuesError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CValuesError, ValueError):
    """Bad user input: shapes, ranges, unparsable files, invalid config."""


class NumericalError(CValuesError, ArithmeticError):
    """A numerical routine failed: no bracket, singular matrix, divergence."""
