"""Exception hierarchy shared by every hclab module."""

from __future__ import annotations


class HclabError(Exception):
    """Base class for all library errors."""


class ParameterError(HclabError, ValueError):
    """A problem parameter lies outside its admissible range."""


class InputError(HclabError, ValueError):
    """Non-finite or malformed numeric input."""


class NumericError(HclabError, ArithmeticError):
    """Overflow, non-finite intermediate values or similar numerical breakdown."""


class ConfigurationError(HclabError, ValueError):
    """Objects were combined in an unsupported way (grid mismatch, asymmetric grid, ...)."""


class DegenerateInputError(HclabError, ValueError):
    """A quotient or normalization is undefined for the given field (zero denominator)."""


class PreconditionError(HclabError, ValueError):
    """An operation's documented precondition does not hold for its input."""


class CalibrationError(HclabError):
    """The amplitude ratio of a candidate profile is not constant."""

    def __init__(self, message: str, constant: float, spread: float):
        super().__init__(message)
        self.constant = constant
        self.spread = spread


class FitError(HclabError):
    """A power-law fit was requested on non-positive data."""


class ConvergenceError(HclabError):
    """The minimizer did not reach its residual target.

    The partially converged :class:`~hclab.solver.SolveResult` is attached as
    ``result`` so callers can still write out the trace and diagnostics.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class ConcentrationAlarm(ConvergenceError):
    """Energy escaped to the inner or outer edge of the window (loss of compactness)."""


class ContinuationError(HclabError):
    """A leg of a theta ramp failed; ``results`` holds the converged legs before it."""

    def __init__(self, message: str, results=None, cause=None):
        super().__init__(message)
        self.results = list(results or [])
        self.cause = cause


class NotFittedError(HclabError, AttributeError):
    """Estimator method called before ``fit``."""


class TailWarning(UserWarning):
    """A significant fraction of an integral sits in the boundary cells or the analytic tail."""
