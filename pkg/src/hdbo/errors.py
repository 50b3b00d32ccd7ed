class InsufficientDataError(ValueError):
    pass


class NumericalError(RuntimeError):
    """Raised when a covariance factorization fails after jitter escalation."""


class DegenerateDataError(ValueError):
    pass


class UndefinedTestError(ValueError):
    pass


class AggregationError(ValueError):
    pass


class SetupError(OSError):
    pass
