"""Exception types shared across the package."""


class SparseOptError(Exception):
    """Base class for all sparseopt errors."""


class ValidationError(SparseOptError, ValueError):
    """A problem or one of its components violates an invariant."""


class DimensionMismatch(ValidationError):
    pass


class InvalidGroupStructure(ValidationError):
    pass


class InvalidLabels(ValidationError):
    pass


class NonPositiveParameter(ValidationError):
    pass


class UnsupportedPenalty(SparseOptError, TypeError):
    """The requested operation is not defined for this penalty."""


class UnsupportedForConstraint(UnsupportedPenalty):
    """Constraint-form penalties have no finite norm value."""


class UnsupportedLoss(SparseOptError, TypeError):
    """The solver does not handle this loss function."""


class SingularGram(SparseOptError, ArithmeticError):
    """The active-set Gram matrix is numerically singular; retry with an
    elastic-net stabilization (gamma > 0)."""


class TieDetected(SparseOptError, ArithmeticError):
    """Two path events coincide within tolerance; the kink ordering is
    ambiguous and the homotopy algorithm aborts rather than choose."""


class OutOfRange(SparseOptError, ValueError):
    """Query point lies outside the computed regularization path."""


class UnknownSolver(SparseOptError, KeyError):
    pass
