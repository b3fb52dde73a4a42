"""Exception types shared across the package.

Input-validation problems subclass ValueError; solver infeasibility
subclasses RuntimeError. The CLI maps the former to exit code 2 and the
latter to exit code 3.
"""


class SpatialRegimesError(Exception):
    """Base class for all errors raised by this package."""


class DisconnectedGraphError(SpatialRegimesError, ValueError):
    """The adjacency input does not form a single connected component."""


class DuplicatePointsError(SpatialRegimesError, ValueError):
    """A coordinate list contains repeated points."""


class TooFewObservationsError(SpatialRegimesError, ValueError):
    """A member set is too small for a unique least-squares fit."""


class NumericalBreakdownError(SpatialRegimesError, ArithmeticError):
    """A rank-one update denominator vanished; the caller should refit."""


class InitializationFailedError(SpatialRegimesError, RuntimeError):
    """No initial partition met the size constraint within the retry limit."""


class MergeInfeasibleError(SpatialRegimesError, RuntimeError):
    """Merging left fewer regions than requested."""


class SchemeInfeasibleError(SpatialRegimesError, RuntimeError):
    """No latent region scheme met the constraints within the retry limit."""
