"""
Custom exception classes for the stochastic-order game toolkit.
These provide specific error types for better error handling and debugging.
"""

from typing import Optional


class StochOrderError(Exception):
    """Base exception for all stochorder errors."""
    pass


class InvalidConfigurationError(StochOrderError):
    """Raised when configuration is invalid or missing."""
    pass


class DistributionError(StochOrderError):
    """Base class for loss distribution errors."""
    pass


class InvalidDistributionError(DistributionError):
    """Raised when distribution parameters or tables violate their invariants."""
    pass


class NoDensityError(DistributionError):
    """Raised when a density is requested from a point mass."""
    pass


class AlreadyCompactError(DistributionError):
    """Raised by truncate when the support is already within the policy cap."""
    pass


class UnboundedSupportError(DistributionError):
    """Raised when an operation needs compact support and gets an unbounded one."""
    pass


class ShapeMismatchError(StochOrderError):
    """Raised when matrix, vector or moment-horizon shapes do not line up."""
    pass


class BothCompactError(StochOrderError):
    """Raised when compare_extended is called on two compact-support inputs."""
    pass


class IncomparablePairError(StochOrderError):
    """Raised when two items of a min/max scan cannot be ordered."""

    def __init__(self, i: int, j: int, message: Optional[str] = None):
        self.i = i
        self.j = j
        super().__init__(message or f"Items {i} and {j} are not comparable")


class CopulaError(StochOrderError):
    """Base class for copula errors."""
    pass


class NotASimplexError(CopulaError):
    """Raised when a strategy or weight vector is not a probability vector."""
    pass


class NegativeRectangleMassError(CopulaError):
    """Raised when a copula assigns negative mass to a rectangle."""
    pass


class GameError(StochOrderError):
    """Base class for game-solving errors."""
    pass


class IncomparablePayoffsError(GameError):
    """Raised when a best response meets two payoffs the ordering cannot decide."""

    def __init__(self, i: int, j: int, side: str, message: Optional[str] = None):
        self.i = i
        self.j = j
        self.side = side
        super().__init__(message or f"{side} payoffs {i} and {j} are not comparable")


class NotConvergedError(GameError):
    """Raised in strict mode when fictitious play hits its iteration limit."""

    def __init__(self, result, message: Optional[str] = None):
        self.result = result
        super().__init__(message or f"Fictitious play did not converge after {result.iterations} iterations")


class UnsupportedCouplingError(GameError):
    """Raised when the solver is handed a non-product copula."""
    pass


class GameFileError(StochOrderError):
    """Base class for game-file ingestion errors."""
    pass


class ParseError(GameFileError):
    """Raised when a game file is malformed; carries the offending location."""

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


class GameValidationError(GameFileError):
    """Raised when a parsed cell fails validation; carries the cell index."""

    def __init__(self, cell, reason: str):
        self.cell = cell
        self.reason = reason
        super().__init__(f"cell {cell}: {reason}")


class TooLargeError(StochOrderError):
    """Raised when an exhaustive oracle is asked for more actions than it supports."""
    pass


class RiskReportError(StochOrderError):
    """Raised when report compilation or output writing fails."""
    pass
