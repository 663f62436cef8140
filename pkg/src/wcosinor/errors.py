"""Exception hierarchy shared by all wcosinor modules."""


class WcosinorError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(WcosinorError, ValueError):
    """An argument violates a documented precondition."""


class InsufficientDataError(WcosinorError):
    """Too few samples for the requested model order."""


class DegenerateDesignError(WcosinorError):
    """The sampling design cannot support the requested computation
    (singular information matrix, emptied KDE training set, weight
    underflow, ...)."""


class SingularCriterionError(WcosinorError):
    """A negative-power eigenvalue criterion was requested for a matrix
    with a zero eigenvalue."""


class SearchFailureError(WcosinorError):
    """Every candidate evaluated during a hyperparameter search was
    degenerate."""


class UndefinedStatisticError(WcosinorError):
    """A summary statistic is undefined for the given input (e.g. a
    coefficient of variation with zero mean)."""


class UndefinedSlopeError(WcosinorError):
    """The no-intercept comparison slope is undefined because every
    covariate statistic is zero."""


class IngestionError(WcosinorError):
    """A data file could not be parsed into a valid panel."""
