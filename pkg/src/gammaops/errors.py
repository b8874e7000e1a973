class DomainError(ValueError):
    """Arguments outside the domain where an operation is defined."""


class NonIntegrableError(DomainError):
    """The integrand's growth outpaces the kernel tail."""


class QuadratureError(RuntimeError):
    """A quadrature did not reach its tolerance within budget."""

    def __init__(self, message, estimate=None, error_estimate=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate


class DegenerateFitError(ValueError):
    """A log-log fit was requested on identically vanishing data."""


class DualPathMismatch(AssertionError):
    """Closed-form and quadrature evaluations disagree."""
