"""Exception hierarchy shared by all modules."""


class FreeFieldError(Exception):
    """Base class for errors raised by this package."""


class SpecMismatch(FreeFieldError, ValueError):
    """Two fields live on different lattices."""


class NonHermitianInput(FreeFieldError, ValueError):
    """Spectral data is not the transform of a real field."""


class TooLarge(FreeFieldError, ValueError):
    """A dense construction was requested beyond its size guard."""


class EmptyBatch(FreeFieldError, ValueError):
    """A Monte Carlo estimator received no samples."""


class Degenerate(FreeFieldError, ValueError):
    """Input carries no information (e.g. an all-zero sequence)."""


class NumericalError(FreeFieldError, ArithmeticError):
    """Base class for numerical failures (non-convergence, factorization)."""


class QuadratureNotConverged(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class FactorizationFailed(NumericalError):
    pass
