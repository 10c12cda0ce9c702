"""Exception hierarchy shared by all interplab modules."""


class InterplabError(Exception):
    """Base class."""


class InputError(InterplabError, ValueError):
    """Invalid argument: dimension mismatch, parameter out of range, ..."""


class UnsupportedError(InterplabError):
    """The request is valid but outside what an operation supports."""


class SolverError(InterplabError, RuntimeError):
    """An iterative solver did not reach its tolerance.

    ``best_value`` carries the best feasible objective found.
    """

    def __init__(self, msg, best_value=None):
        super().__init__(msg)
        self.best_value = best_value


class AccuracyError(InterplabError):
    """A quadrature / truncation accuracy check failed."""

    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class SingularityError(InterplabError, ArithmeticError):
    """Evaluation at (or numerically at) a spectral point."""
