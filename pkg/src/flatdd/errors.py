"""Exception and warning types shared across the package."""


class FlatDdError(Exception):
    """Base class for all library errors."""


class DimensionError(FlatDdError, ValueError):
    """Shapes or index ranges are inconsistent with the operation."""


class FormatError(FlatDdError, ValueError):
    """A file has the right syntax but violates a structural contract."""


class ParseError(FlatDdError, ValueError):
    """A file cannot be parsed at all (bad cell, empty file, ...)."""


class ConfigError(FlatDdError, ValueError):
    """An experiment or problem configuration is invalid."""


class EvaluationError(FlatDdError, ArithmeticError):
    """A user-supplied function produced a non-finite value."""


class DivergenceError(FlatDdError, ArithmeticError):
    """A simulation or iterative solve produced non-finite values."""


class SingularMatrixError(FlatDdError, ValueError):
    """An unregularized solve hit a rank-deficient matrix."""


class PersistencyWarning(UserWarning):
    """A persistency-of-excitation hypothesis could not be verified."""


class DataLengthWarning(UserWarning):
    """The data-length bound for the requested horizon is violated."""


class ConditioningWarning(UserWarning):
    """A linear solve is close to numerically rank-deficient."""
