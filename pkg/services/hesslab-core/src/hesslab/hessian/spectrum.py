# =============================================================================
# hesslab - Layer Spectra (Kronecker approximation and exact)
# =============================================================================

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from loguru import logger

from ..core.config import settings
from ..core.errors import PreconditionError
from ..data.datasets import Dataset
from ..linalg.dense import EigPairs, sym_eig_dense
from ..linalg.lanczos import lanczos_topk
from ..network.model import MlpModel
from .factors import LayerFactors
from .operators import layerwise_dense, layerwise_hvp_operator

SpectrumMethod = Literal["auto", "dense", "lanczos"]


@dataclass(frozen=True)
class KronSpectrum:
    """
    Top eigenpairs of E[M] ⊗ E[x̃ x̃^T].

    Attributes:
        values: products σ_i λ_j, descending
        factors: (k, 2) array of the (i, j) factor indices behind each value
        vectors: (m·n, k) columns u_i ⊗ v_j
    """

    values: np.ndarray
    factors: np.ndarray
    vectors: np.ndarray

    def as_eigpairs(self) -> EigPairs:
        return EigPairs(self.values, self.vectors)


def kron_approx_spectrum(factors: LayerFactors, k: int) -> KronSpectrum:
    """
    Top-k eigenpairs of the Kronecker-factored layer Hessian.

    Ties are broken by smaller output index i, then smaller input index j.
    """
    out_vals, in_vals = factors.out_eig.values, factors.in_eig.values
    m, n = out_vals.size, in_vals.size
    if not 1 <= k <= m * n:
        raise PreconditionError("k must lie in [1, m*n]", {"k": k, "dim": m * n})

    products = np.outer(out_vals, in_vals).ravel()
    ii, jj = np.divmod(np.arange(m * n), n)
    order = np.lexsort((jj, ii, -products))[:k]
    i, j = ii[order], jj[order]

    u = factors.out_eig.vectors[:, i]
    v = factors.in_eig.vectors[:, j]
    vectors = (u.T[:, :, None] * v.T[:, None, :]).reshape(k, m * n).T
    return KronSpectrum(values=products[order], factors=np.column_stack([i, j]), vectors=vectors)


def true_layer_spectrum(
    model: MlpModel,
    data: Dataset,
    p: int,
    k: int,
    include_bias: bool = True,
    method: SpectrumMethod = "auto",
    iters: Optional[int] = None,
    seed: int = 0,
    threads: Optional[int] = None,
) -> EigPairs:
    """
    Top-k eigenpairs of the exact layer-wise Hessian.

    ``auto`` materializes the Hessian when it fits under the dense cap and
    otherwise runs Lanczos on the matrix-free operator.
    """
    m, n = model.layer_shape(p, include_bias)
    dim = m * n
    if not 1 <= k <= dim:
        raise PreconditionError("k must lie in [1, m*n]", {"k": k, "dim": dim})
    if method == "dense" or (method == "auto" and dim <= settings.dense_hessian_cap):
        return sym_eig_dense(layerwise_dense(model, data, p, include_bias, threads)).top(k)
    steps = iters if iters is not None else min(dim, max(3 * k, k + 40))
    logger.debug(f"layer {p}: Lanczos for top-{k} of dim {dim} with {steps} steps")
    return lanczos_topk(layerwise_hvp_operator(model, data, p, include_bias, threads), k, steps, seed=seed)
