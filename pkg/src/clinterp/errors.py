"""Exception types shared across the package."""


class ClinterpError(Exception):
    """Base class for all package errors."""


class DescriptorError(ClinterpError, ValueError):
    """A text descriptor (function, lattice, set expression) failed to parse."""


class DomainError(ClinterpError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class InvalidFunctionError(ClinterpError, ValueError):
    """The supplied samples or parameters do not define a quasiconcave function."""


class UnsupportedExpressionError(ClinterpError, ValueError):
    """Set or function expression outside the closed-form family."""


class PreconditionError(ClinterpError, ValueError):
    """A documented precondition of an operation is violated."""


class InfeasibleDecompositionError(PreconditionError):
    """A requested decomposition does not exist; carries the witness coordinate."""

    def __init__(self, message: str, coordinate: int | None = None):
        super().__init__(message)
        self.coordinate = coordinate


class SolverError(ClinterpError, RuntimeError):
    """A bisection or search failed to converge; carries the bracket state."""

    def __init__(self, message: str, bracket: tuple | None = None):
        super().__init__(message)
        self.bracket = bracket


class VerificationError(ClinterpError, RuntimeError):
    """An internal construction failed its own verification."""
