# =============================================================================
# hesslab - Error Hierarchy
# =============================================================================

from typing import Any, Dict, Optional


class HesslabError(Exception):
    """
    Base class for every error raised by hesslab.

    ``code`` is the machine-readable kind written to CLI error documents;
    ``details`` carries structured context (shapes, indices, limits).
    """

    code = "error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.code, "message": self.message, "details": self.details}


class DimensionError(HesslabError, ValueError):
    code = "dimension"


class PreconditionError(HesslabError, ValueError):
    code = "precondition"


class SolverError(HesslabError):
    code = "solver"


class CapacityError(HesslabError):
    code = "capacity"


class FormatError(HesslabError):
    code = "format"


class TrainingError(HesslabError):
    code = "training"

    def __init__(self, message: str, epoch: int, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, {"epoch": epoch, **(details or {})})
        self.epoch = epoch


class OptimizationError(HesslabError):
    code = "optimization"

    def __init__(self, message: str, iteration: int, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, {"iteration": iteration, **(details or {})})
        self.iteration = iteration


class DomainError(HesslabError, ValueError):
    code = "domain"


class DegeneracyError(HesslabError):
    code = "degeneracy"


class ConfigError(HesslabError):
    code = "config"
