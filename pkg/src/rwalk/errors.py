"""Exception hierarchy shared by all rwalk modules."""

from __future__ import annotations


class RwalkError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(RwalkError, ValueError):
    pass


class DimensionMismatch(RwalkError, ValueError):
    pass


class ConstructionFailure(RwalkError):
    """A random graph generator ran out of connectivity retries."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class NonConvergence(RwalkError):
    """An iterative computation hit its iteration cap.

    ``last`` holds the final iterate (if any) and ``residual`` the last
    convergence measure, so callers can decide whether it is usable.
    """

    def __init__(self, message: str, last=None, residual: float | None = None):
        super().__init__(message)
        self.last = last
        self.residual = residual


class RankDeficiency(RwalkError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class Divergence(RwalkError):
    """SGD produced non-finite model entries."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class ConfigError(RwalkError, ValueError):
    pass
