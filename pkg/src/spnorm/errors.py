"""Exception types shared across the package."""


class SpnormError(Exception):
    """Base class for all package-specific errors."""


class InvalidConfigError(SpnormError):
    """A configuration value is missing, unknown, or outside its valid range."""


class ShapeMismatchError(SpnormError):
    """Sample array length does not match the grid it claims to live on."""


class ResolutionError(SpnormError):
    """The requested profile cannot be represented on the given grid."""


class UnsupportedExponentError(SpnormError):
    """The exponent p lies outside the regime a solver supports.

    p = 3 is rejected as a solve target: the Coulomb term and the local
    nonlinearity scale identically there and existence is an open problem.
    Functional evaluation at p = 3 remains allowed.
    """


class DegenerateFieldError(SpnormError):
    """An operation that needs a nonzero field received (numerically) zero."""


class FiberRootNotFoundError(SpnormError):
    """No positive-to-negative crossing of the fiber derivative in the scan window.

    Carries the scanned profile so callers can inspect what was seen.
    """

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile


class DivergenceError(SpnormError):
    """Descent produced a non-finite energy; carries the iteration history."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = tuple(history)


class BadBracketError(SpnormError):
    """Threshold bracketing endpoints do not classify as required.

    Carries the energy estimates obtained at both endpoints (None when the
    bracket was rejected before solving).
    """

    def __init__(self, message, gamma_lo=None, gamma_hi=None):
        super().__init__(message)
        self.gamma_lo = gamma_lo
        self.gamma_hi = gamma_hi
