"""Exception hierarchy shared across the package."""


class CurveFlowError(Exception):
    """Base class for all domain errors raised by this package."""


class GridSizeError(CurveFlowError):
    """Angular grid size violates the N >= 16, N even requirement."""


class NonconvexInputError(CurveFlowError):
    """A radius-of-curvature profile is not strictly positive."""


class ClosureViolationError(CurveFlowError):
    """Profile carries first Fourier modes, so it traces no closed curve."""


class DegenerateGeometryError(CurveFlowError):
    """Length or area degenerate where a positive value is required."""


class DegenerateTriangleError(CurveFlowError):
    """Three consecutive marker points are collinear within tolerance."""


class NonconvexDetectedError(CurveFlowError):
    """Marker solver found nonpositive discrete curvature mid-run."""


class InsufficientDataError(CurveFlowError):
    """Too few usable samples for a fit or a finite-difference check."""


class NotConvergedError(CurveFlowError):
    """Operation requires a run that ended in the converged state."""


class ManifestError(CurveFlowError):
    """Base class for run-manifest problems."""


class ManifestParseError(ManifestError):
    """Manifest document is not well-formed JSON."""


class ManifestValidationError(ManifestError):
    """Manifest parsed but violates the schema or an invariant."""
