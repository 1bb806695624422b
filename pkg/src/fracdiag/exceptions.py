"""Exception hierarchy shared by all fracdiag modules."""


class FracdiagError(Exception):
    """Base class for every error raised by fracdiag."""


class ValidationError(FracdiagError, ValueError):
    """An argument is outside the supported range."""


class DomainError(FracdiagError, ValueError):
    """A special function was evaluated outside its domain."""


class DataError(FracdiagError, ValueError):
    """User-supplied data (e.g. a load function) produced non-finite values."""


class ResourceError(FracdiagError, MemoryError):
    """A request would exceed the size caps guarding memory and runtime."""


class ConvergenceError(FracdiagError, RuntimeError):
    """An iterative solver hit its iteration cap.

    Attributes
    ----------
    residual_history : list of float
        Relative residual norms, one per iteration.
    failed_k : list of int
        1-based quadrature indices whose shifted solves failed (empty for a
        single solve).
    """

    def __init__(self, message, residual_history=None, failed_k=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
        self.failed_k = list(failed_k or [])


class BracketingError(FracdiagError, RuntimeError):
    """Zero finding could not bracket the requested number of roots."""
