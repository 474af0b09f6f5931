"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so keep the hierarchy flat and
specific: one class per failure mode a caller may want to branch on.
"""

from __future__ import annotations


class MonorideError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(MonorideError, ValueError):
    """A model or policy parameter violates its invariant.

    The message names the offending field.
    """


class ConfigError(MonorideError, ValueError):
    """An experiment configuration failed to parse or cross-validate."""


class IntegrationBlowupError(MonorideError, RuntimeError):
    """The state became non-finite during integration."""

    def __init__(self, message: str, last_good_time: float):
        super().__init__(message)
        self.last_good_time = last_good_time


class RideInfeasibleError(MonorideError, RuntimeError):
    """No admissible input exists at the current state, even at ``u_min``."""

    def __init__(self, message: str, constraint_name: str, residual: float,
                 time: float | None = None):
        super().__init__(message)
        self.constraint_name = constraint_name
        self.residual = residual
        self.time = time


class AllInadmissibleError(MonorideError, RuntimeError):
    """Every control sequence enumerated by the oracle violated a constraint."""


class CertificationError(MonorideError, RuntimeError):
    """An improvement certificate could not be constructed.

    Raised instead of silently passing when the admissible bump collapses
    below machine scale or the recomputed cost gain is not strictly positive.
    """
