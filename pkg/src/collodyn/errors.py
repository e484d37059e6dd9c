"""Exception types shared across the package."""


class CollodynError(Exception):
    """Base class for all package-specific errors."""


class SingularInertiaError(CollodynError):
    """Inertia matrix is singular or conditioned beyond the solver guard."""

    def __init__(self, condition_number: float, limit: float):
        self.condition_number = condition_number
        self.limit = limit
        super().__init__(
            f"inertia condition number {condition_number:.3e} exceeds limit {limit:.3e}"
        )


class NotCollocatedError(CollodynError):
    """The actuation matrix transpose failed the integrability test.

    Carries the offending :class:`~collodyn.charts.IntegrabilityReport` so
    callers can inspect per-column residuals.
    """

    def __init__(self, report, message: str = "passive output is not integrable"):
        self.report = report
        super().__init__(message)


class SingularConfigurationError(CollodynError):
    """No nonsingular square actuation block exists at the requested point."""


class AssumptionViolatedError(CollodynError):
    """A hypothesis required by an operation does not hold numerically.

    Raised, for example, when the unactuated potential Hessian is not
    positive definite at a candidate equilibrium.
    """


class DivergedError(CollodynError):
    """An iterative solver failed to converge within its iteration budget."""
