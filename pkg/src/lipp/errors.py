"""Exception hierarchy shared by every module."""


class LippError(Exception):
    """Base class for all errors raised by this package."""


class InputError(LippError, ValueError):
    """Malformed or out-of-contract input."""


class NumericalError(LippError, ArithmeticError):
    """A linear system was too ill-conditioned to solve reliably."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class InfeasiblePlanError(LippError):
    """A plan violates a physical limit (e.g. carried load above L_max)."""


class ScenarioError(LippError):
    """Scenario generation or terrain-cost evaluation failed."""
