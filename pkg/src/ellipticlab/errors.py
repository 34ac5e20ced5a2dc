"""Exception hierarchy shared by the lab modules."""

from __future__ import annotations


class EllipticLabError(Exception):
    """Base class for all errors raised by ellipticlab."""


class ConfigurationError(EllipticLabError, ValueError):
    """Invalid atom family, malformed table, bad experiment config."""


class TruncationLevelError(ConfigurationError):
    """Truncation level too small: a truncated variance fell below 1/2."""


class DimensionError(EllipticLabError, ValueError):
    pass


class RankError(EllipticLabError, ValueError):
    pass


class DomainError(EllipticLabError, ValueError):
    """A limit function was evaluated outside its domain of definition."""


class BranchError(DomainError):
    """Point lies on the branch cut of the square root."""


class NoOutlierPreimageError(DomainError):
    pass


class ConditioningError(EllipticLabError, ArithmeticError):
    """Shifted matrix is numerically singular."""


class SolverError(EllipticLabError, RuntimeError):
    """A fixed-point or eigen solver failed; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
