"""Exception types raised by the library."""


class LbfgsError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(LbfgsError, ValueError):
    """Bad dimensions, nonpositive sizes or otherwise malformed input."""


class StaleStateError(LbfgsError):
    """Derived data (update vectors) no longer matches the matrix it came from."""


class ConsistencyError(LbfgsError, ArithmeticError):
    """A quantity that must be positive in exact arithmetic was not.

    Signals loss of positive definiteness or numerical breakdown of the
    shifted recursion.
    """


class ShiftTooSmallError(LbfgsError, ValueError):
    """``gamma * shift <= epsilon``; the shifted recursion is not well defined."""


class NotPositiveDefiniteError(LbfgsError, ArithmeticError):
    """Cholesky factorization hit a nonpositive pivot."""


class DenseLimitError(LbfgsError):
    """Refused to materialize a dense matrix above the configured size."""


class NearSingularError(LbfgsError, ArithmeticError):
    """Schur complement of a bordered system is numerically zero."""


class NonConvergenceError(LbfgsError, RuntimeError):
    """Iteration limit reached; ``best`` holds the last iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
