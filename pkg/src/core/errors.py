"""Exception hierarchy shared by the simulator modules.

Every error carries the process exit code the command line reports for it.
"""
from typing import Optional


class QSUError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1


class ValidationError(QSUError):
    """Malformed gate specification, circuit or argument."""

    exit_code = 2


class CircuitParseError(ValidationError):
    """Circuit text could not be parsed; carries the source position."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            location = f"line {line}" if column is None else f"line {line}, col {column}"
            super().__init__(f"{location}: {message}")
        else:
            super().__init__(message)


class NumericalError(QSUError):
    """Fixed-point datapath failure."""

    exit_code = 3


class NumericRangeError(NumericalError):
    """Value outside the representable fixed-point range."""


class NumericDomainError(NumericalError):
    """Argument outside an operation's domain (negative sqrt, tiny reciprocal)."""


class FixedPointOverflowError(NumericalError):
    """A gate kernel saturated an amplitude component."""


class NumericalCollapseError(NumericalError):
    """Winning measurement probability too small to renormalize."""


class DegenerateStateError(NumericalError):
    """Initial state with zero (or unnormalizable) norm."""


class UnsharpReadoutError(QSUError):
    """The register does not hold a single basis state."""

    exit_code = 4


class UnsupportedPermutationError(QSUError):
    """Permutation is not a bit-permute map and cannot be self-routed."""
