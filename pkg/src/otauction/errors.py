"""Exception types shared across the package."""

from __future__ import annotations


class OTAuctionError(Exception):
    """Base class for all errors raised by this package."""


class InvalidProblemError(OTAuctionError):
    """Problem data violates a structural requirement."""


class InfeasibleProblemError(OTAuctionError):
    """No complete transport plan exists for the instance."""


class PlanError(OTAuctionError):
    """A plan references a nonexistent arc or fails a plan precondition."""


class InternalStateError(OTAuctionError):
    """Solver bookkeeping broke an invariant; indicates a bug, not bad input."""


class IterationLimitError(OTAuctionError):
    """The auction hit its safety cap before satisfying every sink."""


class OracleBudgetError(OTAuctionError):
    """The requested exact computation exceeds the configured budget."""


class ExpansionError(OTAuctionError):
    """Transport-to-assignment expansion is not possible under the given caps."""


class ParseError(OTAuctionError):
    """A problem file is malformed.

    Attributes:
        line: 1-based line number of the offending line, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
