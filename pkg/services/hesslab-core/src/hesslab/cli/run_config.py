# =============================================================================
# hesslab - Run Configuration Models
# =============================================================================
"""
One pydantic model per subcommand. Values come from the built-in defaults,
then an optional JSON file, then command-line flags (highest precedence).
Unknown keys are rejected at every level.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..core.errors import ConfigError
from ..pacbayes.bases import Variant
from ..pacbayes.objective import DEFAULT_B_PREC, DEFAULT_C_LAMBDA, DEFAULT_DELTA

C = TypeVar("C", bound="RunConfig")


class RunConfig(BaseModel):
    """Settings shared by every command."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    out: str = Field(default="runs", description="Output directory")
    seed: int = Field(default=0, ge=0)
    threads: Optional[int] = Field(default=None, ge=1)


class DataConfig(BaseModel):
    """Where the samples come from; MNIST paths default to ``HESSLAB_MNIST_DIR``."""

    model_config = ConfigDict(extra="forbid")

    source: Literal["mnist", "mnist2", "mnist_random", "gaussian"] = "mnist"
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    subset: Optional[int] = Field(default=None, ge=1, description="Seeded training subset size")
    test_subset: Optional[int] = Field(default=None, ge=1)
    data_seed: int = Field(default=0, ge=0)
    # synthetic data only
    gaussian_samples: int = Field(default=1000, ge=1)
    gaussian_test_samples: int = Field(default=1000, ge=1)
    gaussian_dim: int = Field(default=20, ge=1)
    num_classes: int = Field(default=10, ge=2)


class TrainConfig(RunConfig):
    data: DataConfig = Field(default_factory=DataConfig)
    hidden: List[int] = Field(default_factory=lambda: [20, 20], description="Hidden layer widths")
    init: Literal["xavier", "gaussian"] = "xavier"
    lr: float = Field(default=0.01, gt=0)
    batch: int = Field(default=128, ge=1)
    epochs: int = Field(default=10, ge=0)
    momentum: float = Field(default=0.0, ge=0)
    weight_decay: float = Field(default=0.0, ge=0)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    snapshot_epochs: List[int] = Field(default_factory=list)

    @field_validator("hidden")
    @classmethod
    def _positive_widths(cls, v: List[int]) -> List[int]:
        if any(w < 1 for w in v):
            raise ValueError("hidden widths must be positive")
        return v


class AnalysisConfig(RunConfig):
    data: DataConfig = Field(default_factory=DataConfig)
    layers: Optional[List[int]] = Field(default=None, description="Zero-based layers; all when omitted")
    include_bias: bool = True
    lanczos_iters: Optional[int] = Field(default=None, ge=1)


class SpectraConfig(AnalysisConfig):
    checkpoint: str
    k: int = Field(default=20, ge=1)


class OverlapConfig(AnalysisConfig):
    checkpoints: List[str] = Field(min_length=2)
    k_max: int = Field(default=50, ge=1)


class CorrespondenceConfig(AnalysisConfig):
    checkpoint: str
    top: int = Field(default=200, ge=1, description="Hessian eigenvectors kept (matrix columns)")


class TheoremConfig(RunConfig):
    widths: List[int] = Field(default_factory=lambda: [128], min_length=1)
    dims: List[int] = Field(default_factory=lambda: [512], min_length=1)
    c: int = Field(default=5, ge=2)
    n_samples: int = Field(default=2000, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)

    @model_validator(mode="after")
    def _widths_hold_classes(self) -> "TheoremConfig":
        if min(self.widths) < self.c:
            raise ValueError("every width must be at least c")
        return self


class PacBayesConfig(RunConfig):
    data: DataConfig = Field(default_factory=DataConfig)
    checkpoint: str = Field(description="Trained network, the posterior mean at start")
    init_checkpoint: Optional[str] = Field(default=None, description="Random initialization, the prior mean")
    variant: Variant = Variant.ITER
    tau: float = Field(default=0.001, ge=0)
    iterations: int = Field(default=1000, ge=0)
    eta: int = Field(default=10, ge=1)
    batch: int = Field(default=128, ge=1)
    lr_decay_every: Optional[int] = Field(default=None, ge=1)
    lr_decay_factor: float = Field(default=0.1, gt=0)
    delta: float = Field(default=DEFAULT_DELTA, gt=0, lt=1)
    b_prec: float = Field(default=DEFAULT_B_PREC, gt=0)
    c_lambda: float = Field(default=DEFAULT_C_LAMBDA, gt=0)
    mc_iters: int = Field(default=5000, ge=1)
    mc_freq: int = Field(default=100, ge=1)
    delta_prime: float = Field(default=0.01, gt=0, lt=1)


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(
    model: Type[C],
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> C:
    """
    Build a validated run config.

    Args:
        model: config class of the command
        path: optional JSON file
        overrides: flag values; entries that are None are ignored

    Returns:
        The validated config. Raises ConfigError for unreadable or malformed
        files and pydantic's ValidationError for invalid values.
    """
    values: Dict[str, Any] = {}
    if path is not None:
        try:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}", {"path": str(path)}) from e
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object", {"path": str(path)})
    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    return model.model_validate(_merge(values, flags))
