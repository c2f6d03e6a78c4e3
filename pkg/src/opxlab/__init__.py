"""High-precision orthogonal-polynomial recurrences, lattice flows and
Painleve residual checks."""

from .direct import (
    RecurrenceData,
    VerblunskyData,
    recurrence_coefficients,
    recurrence_from_moments,
    verblunsky_coefficients,
    verblunsky_from_moments,
)
from .errors import ConfigError, OpxError
from .report import ResidualReport, emit_table
from .weights import Family, WeightSpec, moment_table

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Family",
    "OpxError",
    "RecurrenceData",
    "ResidualReport",
    "VerblunskyData",
    "WeightSpec",
    "emit_table",
    "moment_table",
    "recurrence_coefficients",
    "recurrence_from_moments",
    "verblunsky_coefficients",
    "verblunsky_from_moments",
]
