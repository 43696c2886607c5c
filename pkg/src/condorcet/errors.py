"""Exception hierarchy shared by the computation modules."""


class CondorcetError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(CondorcetError, ValueError):
    pass


class NonGenericCultureError(InvalidInputError):
    """Some adversary subset has zero probability.

    The offending subset (as a frozenset of candidate labels) is kept on
    ``subset`` so callers can report it.
    """

    def __init__(self, message, subset=None):
        super().__init__(message)
        self.subset = subset


class NormalizationError(InvalidInputError):
    pass


class SolverError(CondorcetError, ArithmeticError):
    """Newton iteration did not converge; ``last_iterate`` holds where it stopped."""

    def __init__(self, message, last_iterate=None, residual=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class UnsupportedConfigurationError(CondorcetError):
    pass


class ResourceError(CondorcetError, MemoryError):
    pass
