# =============================================================================
# hesslab - Settings Management
# =============================================================================

import os
from typing import Optional
from pydantic import BaseModel, ConfigDict, Field
from dotenv import load_dotenv, find_dotenv

# Load environment variables from .env file
# Try to load from current directory first, then parent directories
load_dotenv(find_dotenv(usecwd=True))


def _env_int(name: str, default: int) -> int:
    return int(os.getenv(name, str(default)))


class HesslabSettings(BaseModel):
    """
    Process-wide settings for hesslab.

    Defaults come from ``HESSLAB_*`` environment variables (optionally from a
    ``.env`` file). Run configs never read the environment; they only see the
    caps and worker counts through this object.
    """

    model_config = ConfigDict(validate_assignment=True)

    # =============================================================================
    # Logging Configuration
    # =============================================================================

    log_level: str = Field(default=os.getenv("HESSLAB_LOG_LEVEL", "INFO"))
    log_file: Optional[str] = Field(default=os.getenv("HESSLAB_LOG_FILE"))

    # =============================================================================
    # Capacity Limits
    # =============================================================================

    # Max m*n for a materialized layer-wise Hessian
    dense_hessian_cap: int = Field(default=_env_int("HESSLAB_DENSE_HESSIAN_CAP", 4096), ge=1)
    # Max rows (and cols) of a materialized Kronecker product
    kron_max_dim: int = Field(default=_env_int("HESSLAB_KRON_MAX_DIM", 16384), ge=1)
    # Dense symmetric solver: cyclic Jacobi up to this size, LAPACK above
    jacobi_max_dim: int = Field(default=_env_int("HESSLAB_JACOBI_MAX_DIM", 32), ge=0)
    # Max sum of layer output dims for the full output Hessian
    full_output_cap: int = Field(default=_env_int("HESSLAB_FULL_OUTPUT_CAP", 2000), ge=1)
    # Max hidden width accepted by the theorem check
    theorem_max_width: int = Field(default=_env_int("HESSLAB_THEOREM_MAX_WIDTH", 4096), ge=1)

    # =============================================================================
    # Performance Configuration
    # =============================================================================

    chunk_size: int = Field(default=_env_int("HESSLAB_CHUNK_SIZE", 256), ge=1)
    threads: int = Field(default=_env_int("HESSLAB_THREADS", 1), ge=1)

    # =============================================================================
    # Data Locations
    # =============================================================================

    mnist_dir: Optional[str] = Field(default=os.getenv("HESSLAB_MNIST_DIR"))

    def mnist_files(self) -> Optional[dict[str, str]]:
        """Standard MNIST file paths under ``mnist_dir``, or None when unset."""
        if not self.mnist_dir:
            return None
        base = self.mnist_dir.rstrip("/")
        return {
            "train_images": f"{base}/train-images-idx3-ubyte.gz",
            "train_labels": f"{base}/train-labels-idx1-ubyte.gz",
            "test_images": f"{base}/t10k-images-idx3-ubyte.gz",
            "test_labels": f"{base}/t10k-labels-idx1-ubyte.gz",
        }


# Global settings instance
settings = HesslabSettings()
