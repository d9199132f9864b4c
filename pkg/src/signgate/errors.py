"""Exception types shared across the package."""

__all__ = [
    "SignGateError",
    "BracketError",
    "QuadratureError",
    "DegenerateRegionError",
    "DegenerateFitError",
    "InfeasibleError",
    "InsufficientDataError",
]


class SignGateError(Exception):
    """Base class for all package-specific failures."""


class BracketError(SignGateError):
    """A root bracket does not straddle a sign change."""


class QuadratureError(SignGateError):
    """Adaptive integration failed to converge within its budget."""


class DegenerateRegionError(SignGateError):
    """Acceptance region so wide that the discovery rate underflows."""


class DegenerateFitError(SignGateError):
    """Moment fit is infeasible (no excess variance to attribute to effects).

    Carries clamped fallback parameters so callers may proceed with a
    deliberately conservative model.
    """

    def __init__(self, message, fallback):
        super().__init__(message)
        self.fallback = fallback


class InfeasibleError(SignGateError):
    """No point of the search grid satisfies the error-rate constraint."""


class InsufficientDataError(SignGateError):
    """Too few conditioned Monte Carlo samples to run a diagnostic."""
