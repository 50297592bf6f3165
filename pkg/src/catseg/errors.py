"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures
to distinct process statuses without a lookup table of its own.
"""

from __future__ import annotations


class CatsegError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidSequenceError(CatsegError, ValueError):
    """A categorical sequence or matrix violates its invariants."""

    exit_code = 2


class ShapeMismatchError(CatsegError, ValueError):
    exit_code = 3


class NonDyadicLengthError(CatsegError, ValueError):
    """A Haar operation received a length that is not a power of two."""

    exit_code = 4


class PenaltyError(CatsegError, ValueError):
    """Unsupported penalty family or invalid constants for a strategy."""

    exit_code = 5


class SegmentationError(CatsegError, ValueError):
    exit_code = 6


class CalibrationError(CatsegError, RuntimeError):
    """The penalty sweep did not reach the smallest model within its cap."""

    exit_code = 7


class OracleSizeError(CatsegError, ValueError):
    exit_code = 8


class EstimatorFailure(CatsegError, RuntimeError):
    """An estimator raised during a Monte Carlo replicate."""

    exit_code = 9

    def __init__(self, replicate: int, cause: BaseException):
        super().__init__(f"estimator failed at replicate {replicate}: {cause}")
        self.replicate = replicate
        self.cause = cause


class FastaFormatError(CatsegError, ValueError):
    exit_code = 10

    def __init__(self, message: str, position: int | None = None,
                 character: str | None = None):
        super().__init__(message)
        self.position = position
        self.character = character


class LengthPolicyError(CatsegError, ValueError):
    exit_code = 11


class OutputError(CatsegError, OSError):
    exit_code = 12
