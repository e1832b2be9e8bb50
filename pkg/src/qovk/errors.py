"""Exception hierarchy shared by every qovk module."""


class QovkError(Exception):
    """Base class for all qovk errors."""


class ShapeError(QovkError, ValueError):
    """Operand dimensions do not fit together."""


class DomainError(QovkError, ValueError):
    """An argument is outside the set the operation is defined on."""


class SizeError(QovkError, ValueError):
    """A result would exceed the configured maximum dimension."""


class SingularityError(QovkError, ArithmeticError):
    """A linear system is not positive definite.

    The offending minimum eigenvalue is kept on ``min_eigenvalue``.
    """

    def __init__(self, message, min_eigenvalue):
        super().__init__(f"{message} (min eigenvalue {min_eigenvalue:.3e})")
        self.min_eigenvalue = float(min_eigenvalue)


class PostSelectionError(QovkError, ArithmeticError):
    """Post-selected outcome has (numerically) zero probability."""


class ValidityError(QovkError, ValueError):
    """A matrix fails a physical validity check (CP, TP, density...).

    ``diagnostics`` maps check names to measured values.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ReconstructionError(QovkError, ArithmeticError):
    """Probe system for channel reconstruction could not be solved."""
