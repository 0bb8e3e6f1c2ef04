from .config import HesslabSettings, settings
from .errors import (
    CapacityError,
    ConfigError,
    DegeneracyError,
    DimensionError,
    DomainError,
    FormatError,
    HesslabError,
    OptimizationError,
    PreconditionError,
    SolverError,
    TrainingError,
)
from .random import make_rng

__all__ = [
    "HesslabSettings",
    "settings",
    "make_rng",
    "HesslabError",
    "CapacityError",
    "ConfigError",
    "DegeneracyError",
    "DimensionError",
    "DomainError",
    "FormatError",
    "OptimizationError",
    "PreconditionError",
    "SolverError",
    "TrainingError",
]
