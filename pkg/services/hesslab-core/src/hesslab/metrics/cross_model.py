# =============================================================================
# hesslab - Cross-model Eigenspace Overlap
# =============================================================================

from itertools import combinations
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from ..core.errors import PreconditionError
from ..data.datasets import Dataset
from ..hessian.operators import layerwise_hvp_operator
from ..hessian.spectrum import true_layer_spectrum
from ..linalg.dense import EigPairs
from ..linalg.lanczos import ritz_residuals
from ..network.model import MlpModel
from .subspace import OverlapCurve, random_overlap_baseline, subspace_overlap

DEFLATION_MARGIN = 10
RESIDUAL_GATE = 1e-4


def converged_prefix(residuals: np.ndarray, values: np.ndarray, gate: float = RESIDUAL_GATE) -> int:
    """Length of the leading run of pairs with ‖Hv − λv‖ ≤ gate·λ1."""
    limit = gate * max(abs(float(values[0])), np.finfo(float).tiny)
    bad = np.flatnonzero(residuals > limit)
    return int(bad[0]) if bad.size else int(residuals.size)


def cross_model_overlap(
    models: Sequence[MlpModel],
    data: Dataset,
    p: int,
    k_max: int,
    include_bias: bool = True,
    iters: Optional[int] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> OverlapCurve:
    """
    Mean pairwise overlap of the top-k layer-Hessian eigenspaces of several models.

    Each model contributes ``k_max + 10`` eigenpairs; the curve stops at the
    first k where any model's pair fails the residual gate. Pairs are visited
    in sorted index order and the spread is the sample standard deviation.
    """
    if len(models) < 2:
        raise PreconditionError("cross-model overlap needs at least two models", {"models": len(models)})
    dims = {m.layer_dims for m in models}
    if len(dims) != 1:
        raise PreconditionError("models have different architectures", {"layer_dims": sorted(dims)})
    rows, cols = models[0].layer_shape(p, include_bias)
    dim = rows * cols
    if not 1 <= k_max <= dim:
        raise PreconditionError("k_max must lie in [1, m*n]", {"k_max": k_max, "dim": dim})

    wanted = min(dim, k_max + DEFLATION_MARGIN)
    spectra: List[EigPairs] = []
    usable = k_max
    for idx, model in enumerate(models):
        pairs = true_layer_spectrum(model, data, p, wanted, include_bias, iters=iters, seed=seed, threads=threads)
        op = layerwise_hvp_operator(model, data, p, include_bias, threads)
        good = converged_prefix(ritz_residuals(op, pairs), pairs.values)
        if good < usable:
            logger.warning(f"model {idx}: only {good} converged eigenpairs for layer {p}, truncating the curve")
            usable = good
        spectra.append(pairs)
    if usable < 1:
        raise PreconditionError("no converged eigenpairs to compare", {"layer": p})

    ks = np.arange(1, usable + 1)
    pairs_idx = list(combinations(range(len(models)), 2))
    per_pair = np.array(
        [[subspace_overlap(spectra[a].vectors[:, :k], spectra[b].vectors[:, :k]) for k in ks] for a, b in pairs_idx]
    )
    stds = per_pair.std(axis=0, ddof=1) if per_pair.shape[0] > 1 else np.zeros(ks.size)
    baselines = np.array([random_overlap_baseline(int(k), dim) for k in ks])
    return OverlapCurve(ks, per_pair.mean(axis=0), stds=stds, baselines=baselines)
