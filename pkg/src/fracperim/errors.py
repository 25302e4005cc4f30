"""Exception types shared across the package."""


class FracperimError(Exception):
    """Base class for all package errors."""


class ConfigError(FracperimError, ValueError):
    """Invalid configuration, parameters, or type invariants."""


class UnsupportedShapeError(FracperimError, ValueError):
    """No analytic formula available for the requested shape."""


class MisalignedDomainError(FracperimError, ValueError):
    """Evaluation window is not aligned with cell faces of the grid."""


class PaddingTooSmallError(FracperimError, ValueError):
    """Requested truncation radius exceeds the padded region of the grid."""


class OverlapError(FracperimError, ValueError):
    """Intervals or cell sets overlap where disjointness is required."""


class ZeroOffsetError(FracperimError, ValueError):
    """A cell was paired with itself."""


class NonConvergenceError(FracperimError, RuntimeError):
    """Adaptive refinement hit its depth limit before reaching tolerance."""


class BudgetExceededError(FracperimError, ValueError):
    """Problem size exceeds the exhaustive enumeration budget."""


class AsymmetricGridError(FracperimError, ValueError):
    """Grid lacks the reflection symmetry required by a comparison check."""


class ShiftError(FracperimError, ValueError):
    """Shift vector is not grid aligned or leaves the padded grid."""
