"""Exception types shared across the package."""


class CscsError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(CscsError):
    """Operands have incompatible shapes."""


class ZeroVarianceColumn(CscsError):
    """Scaling was requested but a data column is constant."""


class InvalidCovariance(CscsError):
    """Covariance input violates a required property (e.g. S_ii <= 0)."""


class InvalidProblem(CscsError):
    """Solver input violates a precondition."""


class StaleResidual(CscsError):
    """Cached low-rank residual no longer matches the current iterate."""


class FoldDegenerate(CscsError):
    """A cross-validation training fold has a zero-variance variable."""


class DomainError(CscsError):
    """A numeric argument is outside its admissible domain."""


class DegenerateConfig(CscsError):
    """Synthetic model configuration leaves no usable sparsity pattern."""


class EmptyTruth(CscsError):
    """True-positive rate is undefined because the true edge set is empty."""


class InsufficientCurve(CscsError):
    """An ROC curve has too few points to integrate."""


class SingularBlock(CscsError):
    """A covariance block required to be nonsingular is singular."""
