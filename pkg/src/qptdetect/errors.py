"""Exception hierarchy. CLI exit codes key off these classes."""


class QptError(Exception):
    """Base class for all package errors."""


class InvalidModelError(QptError, ValueError):
    pass


class UnsupportedSectorError(QptError, ValueError):
    pass


class ConvergenceError(QptError, RuntimeError):
    """Iterative eigensolver hit its iteration cap.

    ``residual`` carries the best residual norm reached.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class NumericalIntegrityError(QptError, ArithmeticError):
    """A computed object violates an invariant beyond tolerance."""


class InsufficientDataError(QptError, ValueError):
    pass
