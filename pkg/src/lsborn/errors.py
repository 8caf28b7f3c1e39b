"""Exception hierarchy shared by all modules."""


class LSBornError(Exception):
    """Base class for all package errors."""


class ValidationError(LSBornError, ValueError):
    """An input violates a documented precondition."""


class MediumError(ValidationError):
    """The contrast function violates q > -1 or cannot be sampled on a grid."""


class NumericalError(LSBornError, ArithmeticError):
    """A numerical procedure could not deliver a result."""


class SingularMatrixError(NumericalError):
    """A pivot vanished during factorization."""


class ConvergenceError(NumericalError):
    """An iterative procedure exhausted its iteration budget."""
