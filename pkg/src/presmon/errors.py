"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2, data
problems exit 3, fitting/training problems exit 4.
"""

from __future__ import annotations


class PresmonError(Exception):
    """Base class for all package errors."""


class ConfigError(PresmonError):
    """Invalid or inconsistent run configuration, or a missing referenced file."""


class DataError(PresmonError):
    """Input data cannot support the requested operation."""


class EmptyLogError(DataError):
    """A non-empty input yielded zero usable cases after cleaning."""


class UnlabeledCaseError(DataError):
    """A case's terminal activity matches neither outcome set."""


class SplitError(DataError):
    """Split ratios are invalid or a split would receive zero cases."""


class CalibrationError(DataError):
    """Calibration split is empty or degenerate for the requested calibration."""


class FitError(PresmonError):
    """Model fitting failed."""


class DegenerateModelError(FitError):
    """Training data admits no usable model (e.g. a single outcome class)."""


class ConvergenceError(FitError):
    """An iterative fit did not converge within its iteration budget."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TrainingError(PresmonError):
    """Online policy optimization produced a non-finite quantity or diverged."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ProtocolError(PresmonError):
    """An environment or stateful object was driven out of order."""
