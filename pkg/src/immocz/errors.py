"""Exception types raised across the package."""


class IMMOCZError(Exception):
    """Base class for all package errors."""


class ParameterError(IMMOCZError, ValueError):
    """Invalid system parameters, bit vectors or configuration values."""


class CodebookIndexError(IMMOCZError, IndexError):
    """Codebook index outside ``[1, 2**(N-K)]``."""


class DegenerateInputError(IMMOCZError, ValueError):
    """All-zero vector where a nonzero one is required."""


class DegeneratePolynomialError(IMMOCZError, ArithmeticError):
    """Received polynomial whose leading coefficient has vanished."""


class UndefinedAngleError(IMMOCZError, ValueError):
    """Angle requested for the origin."""
