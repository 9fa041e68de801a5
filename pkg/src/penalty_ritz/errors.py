"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid or unsupported configuration (domain kind, architecture, config key)."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ContractViolation(RuntimeError):
    """An operation was called in a mode its contract excludes."""


class NumericalFailure(FloatingPointError):
    """Non-finite value produced during evaluation.

    ``point`` holds the first offending coordinate when known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class FactorizationError(NumericalFailure):
    """Sparse factorization met a nonpositive pivot."""

    def __init__(self, message, pivot_index):
        super().__init__(message)
        self.pivot_index = pivot_index


class TrainingDiverged(NumericalFailure):
    """Energy blew up or became NaN during training; ``trace`` is the log so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace
