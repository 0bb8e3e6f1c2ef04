# =============================================================================
# hesslab - Approximate Top Eigenspace of the Full Hessian
# =============================================================================
"""
Builds approximate eigenvectors of the full-network Hessian from the top
eigenvectors of the stacked output Hessian E[M_full] = E[G_full^T A G_full].

Each eigenvector u of E[M_full] splits into per-layer segments u^(p), and
the candidate direction is the concatenation of u^(p) ⊗ Ê[x̃^(p)]. Its
eigenvalue estimate σ‖w‖² is taken before orthogonalization.
"""

from typing import Optional

import numpy as np
from loguru import logger

from ..core.config import settings
from ..core.errors import CapacityError, PreconditionError
from ..core.parallel import map_chunks, tree_reduce
from ..data.datasets import Dataset
from ..linalg.dense import EigPairs, fix_signs, gram_schmidt, sym_eig_dense
from ..network.model import MlpModel, forward_batch, logit_jacobians_batch, q_factor_batch
from .factors import check_inputs, extend_inputs


def full_output_hessian(
    model: MlpModel,
    data: Dataset,
    include_bias: bool = True,
    threads: Optional[int] = None,
):
    """E[M_full] over all layer outputs and the per-layer input means."""
    check_inputs(model, data, 0)
    widths = model.layer_dims[1:]
    total = int(sum(widths))
    if total > settings.full_output_cap:
        raise CapacityError("stacked output dimension exceeds the cap", {"dim": total, "cap": settings.full_output_cap})

    def part(start: int, stop: int):
        cache = forward_batch(model, data.inputs[start:stop])
        q = q_factor_batch(cache.probs)
        stacked = np.concatenate([q @ logit_jacobians_batch(model, cache, p) for p in range(model.num_layers)], axis=2)
        rows = stacked.reshape(-1, total)
        sums = [extend_inputs(cache.layer_inputs[p], include_bias).sum(axis=0) for p in range(model.num_layers)]
        return [rows.T @ rows] + sums

    reduced = tree_reduce(map_chunks(part, data.n_samples, threads), lambda a, b: [x + y for x, y in zip(a, b)])
    n = data.n_samples
    m_full = reduced[0] / n
    return 0.5 * (m_full + m_full.T), [s / n for s in reduced[1:]]


def full_hessian_approx(
    model: MlpModel,
    data: Dataset,
    k: int,
    include_bias: bool = True,
    threads: Optional[int] = None,
) -> EigPairs:
    """
    Orthonormal approximate top-k eigenbasis of the full Hessian.

    Candidates are ordered by their eigenvalue estimate; any that become
    numerically dependent during Gram-Schmidt are dropped, so fewer than k
    columns may come back.
    """
    widths = model.layer_dims[1:]
    if not 1 <= k <= sum(widths):
        raise PreconditionError("k must lie in [1, sum of layer widths]", {"k": k, "max": int(sum(widths))})
    m_full, means = full_output_hessian(model, data, include_bias, threads)
    eig = sym_eig_dense(m_full)

    bounds = np.concatenate([[0], np.cumsum(widths)])
    candidates, estimates = [], []
    for i in range(k):
        u = eig.vectors[:, i]
        w = np.concatenate([np.kron(u[bounds[p] : bounds[p + 1]], means[p]) for p in range(model.num_layers)])
        candidates.append(w)
        estimates.append(eig.values[i] * float(w @ w))

    estimates = np.asarray(estimates)
    order = np.argsort(-estimates, kind="stable")
    # normalized first: the drop tolerance is absolute
    stacked = np.column_stack([candidates[i] / max(np.linalg.norm(candidates[i]), 1e-300) for i in order])
    basis, kept = gram_schmidt(stacked)
    if len(kept) < k:
        logger.warning(f"full Hessian approximation kept {len(kept)} of {k} directions after orthogonalization")
    values = estimates[order][kept]
    return EigPairs(values, fix_signs(basis))
