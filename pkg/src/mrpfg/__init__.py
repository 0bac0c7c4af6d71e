"""Identification of the performance frequency gain of multirate closed loops."""

from mrpfg.errors import EvaluationError, InstabilityError, InvalidInputError
from mrpfg.signals import RateConfig, Signal, Spectrum

__version__ = "0.1.0"

__all__ = [
    "EvaluationError",
    "InstabilityError",
    "InvalidInputError",
    "RateConfig",
    "Signal",
    "Spectrum",
]
