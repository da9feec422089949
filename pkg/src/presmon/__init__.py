"""Resource-constrained prescriptive process monitoring.

Event-log preprocessing, uncertainty-aware predictive models, a replay
simulation environment with a finite intervention resource pool, and an
online policy learner that decides when to trigger interventions.
"""

__version__ = "0.1.0"

from .errors import (
    CalibrationError,
    ConfigError,
    ConvergenceError,
    DataError,
    DegenerateModelError,
    EmptyLogError,
    FitError,
    PresmonError,
    ProtocolError,
    SplitError,
    TrainingError,
    UnlabeledCaseError,
)

__all__ = [
    "__version__",
    "PresmonError",
    "ConfigError",
    "DataError",
    "EmptyLogError",
    "UnlabeledCaseError",
    "SplitError",
    "CalibrationError",
    "FitError",
    "DegenerateModelError",
    "ConvergenceError",
    "TrainingError",
    "ProtocolError",
]
