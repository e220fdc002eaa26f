"""Exception hierarchy shared by all modules."""


class DeformAlgError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(DeformAlgError, ValueError):
    pass


class ResourceLimitError(DeformAlgError):
    pass


class ConstraintError(DeformAlgError, ValueError):
    """Raised when lambda1**2 * lambda2**2 * j(j+1) != 1."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NumericalConsistencyError(DeformAlgError, ArithmeticError):
    pass


class UnsupportedCaseError(DeformAlgError, NotImplementedError):
    pass


class RepresentationError(DeformAlgError):
    """A representation does not have the structure its construction assumes."""


class PreconditionError(DeformAlgError, ValueError):
    pass
