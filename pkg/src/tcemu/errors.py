"""Exception types raised across the package."""


class TcemuError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(TcemuError, ValueError):
    pass


class LengthMismatch(TcemuError, ValueError):
    pass


class RoleMismatch(TcemuError, TypeError):
    pass


class RangeOverflow(TcemuError, ArithmeticError):
    """An entry rounds to half-precision infinity, so its residual is undefined."""


class EmptyInput(TcemuError, ValueError):
    pass


class ConfigError(TcemuError, ValueError):
    pass


class FormatError(TcemuError, ValueError):
    """A matrix file has a bad magic number, version or dtype code."""


class TruncatedFile(FormatError):
    pass
