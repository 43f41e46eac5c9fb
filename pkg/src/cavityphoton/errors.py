"""Exception and warning types raised by the simulator."""


class CavityPhotonError(Exception):
    """Base class for all package errors."""


class InvalidParameter(CavityPhotonError, ValueError):
    """A rate, branching ratio or pulse field violates its invariant.

    ``name`` carries the violated field or invariant (``"g"``, ``"branching"``...).
    """

    def __init__(self, name, message=None):
        self.name = name
        super().__init__(message or name)


class DomainError(CavityPhotonError, ValueError):
    pass


class NumericalError(CavityPhotonError):
    """Integration failed to produce a trustworthy answer."""


class ToleranceNotMet(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class MismatchedInputs(CavityPhotonError, ValueError):
    pass


class SpecError(CavityPhotonError, ValueError):
    """Malformed sweep or run configuration."""


class BoundViolation(CavityPhotonError):
    """A simulated success probability exceeded its analytic ceiling."""


class BracketError(UserWarning):
    """Golden-section bracket does not enclose an interior maximum."""


class BudgetExhausted(UserWarning):
    """Optimizer stopped on its evaluation budget before converging."""
