"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so each family stays distinct.
"""


class SimoLqrError(Exception):
    """Base class for all package errors."""


class ContractError(SimoLqrError, ValueError):
    """An argument has the wrong shape or violates a documented precondition."""


class ConfigurationError(SimoLqrError, ValueError):
    """Invalid configuration value (bad sample time, zero-norm equilibrium, ...)."""


class NumericalDomainError(SimoLqrError, ArithmeticError):
    """A computation produced a non-finite value."""


class DesignError(SimoLqrError):
    """Controller synthesis failed: uncontrollable pair or CARE breakdown."""

    def __init__(self, message, report=None, residual=None):
        super().__init__(message)
        self.report = report
        self.residual = residual


class DivergenceError(SimoLqrError):
    """Closed-loop simulation left the admissible region.

    ``trajectory`` holds every sample recorded before the abort.
    """

    def __init__(self, message, trajectory=None, time=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time
