"""Exception types shared across the package."""


class GradspaceError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GradspaceError):
    """Operands live in incompatible spaces."""


class PreconditionViolation(GradspaceError):
    """A documented operation precondition does not hold for the inputs."""


class InfeasibleProblem(GradspaceError):
    """The constraint set of a variational problem is empty."""


class NonConvergence(GradspaceError):
    """An iterative solve hit its iteration cap before meeting tolerance.

    Carries the best iterate seen and its residual so callers can inspect
    or restart from it.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class RegularityViolation(GradspaceError):
    """A cone element with zero minimal gradient but nonzero norm was found."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SchemaError(GradspaceError):
    """A problem document failed schema validation."""


class UnsupportedProblem(GradspaceError):
    """The requested operation is not defined for this relation variant."""
