"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands have incompatible or unsupported shapes."""


class NotHermitianError(ValueError):
    """A matrix that must be Hermitian is not, within tolerance."""


class InvalidStateError(ValueError):
    """A density matrix, ensemble or evolution violates its invariants."""


class PostselectionError(ValueError):
    """Pre/post-selection with vanishing success probability."""


class TimeOrderError(ValueError):
    """Observable times are not ordered as the scenario requires."""


class GridResolutionError(RuntimeError):
    """The sampling grid does not resolve the meter reading density."""
