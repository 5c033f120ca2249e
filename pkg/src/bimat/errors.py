"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`BimatError`.
The CLI maps :class:`PreconditionError` (and its subclasses) to exit status 2
and :class:`NumericError` (and its subclasses) to exit status 3.
"""


class BimatError(Exception):
    """Base class for all library errors."""


class PreconditionError(BimatError, ValueError):
    """An input violates a documented precondition."""


class DimensionError(PreconditionError):
    """Operand shapes do not conform."""


class InputError(PreconditionError):
    """Malformed or inconsistent user input (bad spectrum, bad JSON, ...)."""


class StructuralError(PreconditionError):
    """The problem is structurally infeasible (uncontrollable pair, ...)."""


class NumericError(BimatError, ArithmeticError):
    """A numerical procedure failed or produced an out-of-tolerance result."""


class SingularityError(NumericError):
    """A matrix that must be inverted is singular or too ill-conditioned."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class NoUniqueSolutionError(NumericError):
    """The uniqueness condition of a linear matrix equation is violated."""

    def __init__(self, message, gap=0.0):
        super().__init__(message)
        self.gap = gap


class NoSolutionError(NumericError):
    """An inhomogeneous linear system is inconsistent."""

    def __init__(self, message, residual=float("inf")):
        super().__init__(message)
        self.residual = residual


class CoprimenessError(NumericError):
    """A polynomial factorization failed its coprimeness certification."""

    def __init__(self, message, points=()):
        super().__init__(message)
        self.points = tuple(points)


class NonsingularSearchError(NumericError):
    """No nonsingular transforming solution was found in the allowed draws."""

    def __init__(self, message, best_condition=float("inf")):
        super().__init__(message)
        self.best_condition = best_condition
