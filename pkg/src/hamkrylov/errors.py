"""Exception types raised by the library."""


class HamKrylovError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(HamKrylovError, ValueError):
    """Operands have incompatible shapes."""


class SingularMatrixError(HamKrylovError):
    """A linear solve hit a pivot that is zero to tolerance."""


class NotPositiveDefiniteError(HamKrylovError):
    """A weight matrix required to be positive definite is not."""


class SeriousBreakdownError(HamKrylovError):
    """Symplectic Lanczos pairing coefficient vanished with a nonzero candidate."""


class JOrthogonalityError(HamKrylovError):
    """A basis lost J-orthogonality beyond the failure threshold."""


class MethodNotApplicableError(HamKrylovError):
    """A projection method cannot be applied to the given system."""


class ConfigError(HamKrylovError, ValueError):
    """An experiment configuration failed validation."""
