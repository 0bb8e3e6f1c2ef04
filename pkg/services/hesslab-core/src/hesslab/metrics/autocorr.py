# =============================================================================
# hesslab - Rank-one Structure of the Input Autocorrelation
# =============================================================================

import math

import numpy as np
from pydantic import BaseModel, Field, field_serializer

from ..core.errors import DimensionError, PreconditionError
from ..hessian.factors import LayerFactors
from ..linalg.dense import sym_eig_dense

# eigenvalues at or below this fraction of λ1 count as zero
ZERO_RATIO = 1e-12


class AutocorrStats(BaseModel):
    """How close E[xx^T] is to the rank-one matrix E[x]E[x]^T."""

    sq_dot: float = Field(description="(v1 · E[x]/‖E[x]‖)²")
    spec_ratio: float = Field(description="λ1/λ2 of E[xx^T]; inf when λ2 vanishes")
    mean_vs_cov: float = Field(description="‖E[x]E[x]^T‖ / ‖Cov[x]‖; inf for zero covariance")

    @field_serializer("spec_ratio", "mean_vs_cov")
    def _finite_or_inf(self, value: float):
        return "inf" if math.isinf(value) else value


def autocorr_stats(f: LayerFactors, x_mean: np.ndarray) -> AutocorrStats:
    """
    Rank-one diagnostics for a layer input.

    Args:
        f: factors whose ``input_autocorr`` matches ``x_mean`` (build them with
            ``include_bias=False`` for the plain-input statistics)
        x_mean: E[x] over the same samples

    Returns:
        AutocorrStats with the squared dot product, spectral ratio and
        mean-to-covariance norm ratio.
    """
    mu = np.asarray(x_mean, dtype=np.float64)
    if mu.shape != (f.in_dim,):
        raise DimensionError("mean does not match the autocorrelation", {"mean": mu.shape, "dim": f.in_dim})
    norm = float(np.linalg.norm(mu))
    if norm == 0.0:
        raise PreconditionError("autocorrelation stats need a nonzero mean")

    values = f.in_eig.values
    v1 = f.in_eig.vectors[:, 0]
    sq_dot = float((v1 @ mu / norm) ** 2)

    lam1 = float(values[0])
    lam2 = float(values[1]) if values.size > 1 else 0.0
    spec_ratio = lam1 / lam2 if lam2 > ZERO_RATIO * max(lam1, 1.0) else math.inf

    cov = f.input_autocorr - np.outer(mu, mu)
    cov_norm = float(np.max(np.abs(sym_eig_dense(cov).values)))
    mean_vs_cov = norm**2 / cov_norm if cov_norm > ZERO_RATIO * max(norm**2, 1.0) else math.inf
    return AutocorrStats(sq_dot=min(sq_dot, 1.0), spec_ratio=spec_ratio, mean_vs_cov=mean_vs_cov)
