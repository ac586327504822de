"""Exception types raised by ymhflow."""


class YMHError(Exception):
    """Base class for all package errors."""


class GridError(YMHError, ValueError):
    """Invalid grid size, or fields living on different grids / ranks."""


class KindError(YMHError, TypeError):
    """An operation was applied to a field of an incompatible form kind."""


class InvalidDescriptor(YMHError, ValueError):
    """A structure-group descriptor failed its algebraic self-checks."""


class NotInSubalgebra(YMHError, ValueError):
    """Field values leave the subalgebra of the declared structure group."""


class NonConvergence(YMHError, RuntimeError):
    """An iterative solve did not reach its tolerance."""


class NoSpectralGap(YMHError, RuntimeError):
    """Singular values do not separate cleanly into kernel and bulk."""


class NotCritical(YMHError, RuntimeError):
    """A limit analysis was requested on a pair far from a critical point."""


class NumericalFailure(YMHError, FloatingPointError):
    """NaN or Inf appeared in the flow state."""


class CheckpointError(YMHError, ValueError):
    """Corrupted, truncated or version-mismatched checkpoint file."""
