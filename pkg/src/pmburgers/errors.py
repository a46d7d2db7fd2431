"""Exception types shared across the package."""


class PmburgersError(Exception):
    """Base class for all package-specific errors."""


class StabilityViolation(PmburgersError):
    """An unresolved mode has a non-negative eigenvalue, so the linear
    high-mode dynamics is not contracting and pullback limits do not exist."""


class NRViolation(PmburgersError):
    """A required non-resonance gap is non-positive; the improper integrals
    defining the manifold coefficients diverge."""


class NonFiniteError(PmburgersError):
    """State left the finite range during time stepping (blow-up guard)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegenerateDenominator(PmburgersError):
    """A ratio diagnostic was requested on a window where the unresolved
    part of the signal is identically zero."""


class EmptyInput(PmburgersError):
    """Not enough samples to estimate anything."""


class ConfigInvalid(PmburgersError):
    """Run configuration failed validation.

    Carries a list of ``(field, message)`` pairs in ``.problems``.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        lines = "; ".join(f"{field}: {msg}" for field, msg in self.problems)
        super().__init__(f"invalid configuration: {lines}")
