# =============================================================================
# hesslab - Exact Layer-wise and Full G-term Hessians
# =============================================================================
"""
Exact Hessian actions built from per-sample logit Jacobians.

The layer-wise Hessian of layer p is E[M_x ⊗ x̃ x̃^T]; acting on
w = vec(V) (row-major, V of shape m × n) it gives vec(E[M_x V x̃ x̃^T]).
The full-network G-term stacks the same per-layer blocks. Nothing here ever
forms a Hessian unless :func:`layerwise_dense` is asked to.
"""

from typing import List, Optional

import numpy as np
from loguru import logger

from ..core.config import settings
from ..core.errors import CapacityError
from ..core.parallel import chunked_sum, map_chunks
from ..data.datasets import Dataset
from ..linalg.lanczos import LinearOperator
from ..network.model import MlpModel, forward_batch, logit_jacobians_batch, q_factor_batch
from .factors import check_inputs, extend_inputs, scaled_jacobians


def layerwise_hvp_operator(
    model: MlpModel,
    data: Dataset,
    p: int,
    include_bias: bool = True,
    threads: Optional[int] = None,
) -> LinearOperator:
    """Matrix-free layer-wise Hessian of layer p (G-term, which is the whole block)."""
    check_inputs(model, data, p)
    m, n = model.layer_shape(p, include_bias)

    def part(start: int, stop: int):
        qg, xin = scaled_jacobians(model, data.inputs[start:stop], p)
        return qg, extend_inputs(xin, include_bias)

    parts = map_chunks(part, data.n_samples, threads)
    qg = np.concatenate([a for a, _ in parts])
    xt = np.concatenate([b for _, b in parts])
    count = data.n_samples

    def apply(v: np.ndarray) -> np.ndarray:
        t = xt @ v.reshape(m, n).T
        u = np.einsum("scm,sm->sc", qg, t)
        r = np.einsum("scm,sc->sm", qg, u)
        return (r.T @ xt).ravel() / count

    return LinearOperator(dim=m * n, apply=apply)


def layerwise_dense(
    model: MlpModel,
    data: Dataset,
    p: int,
    include_bias: bool = True,
    threads: Optional[int] = None,
) -> np.ndarray:
    """The materialized layer-wise Hessian, mean over samples of M_x ⊗ x̃ x̃^T."""
    check_inputs(model, data, p)
    m, n = model.layer_shape(p, include_bias)
    if m * n > settings.dense_hessian_cap:
        raise CapacityError(
            "layer Hessian too large to materialize; use layerwise_hvp_operator",
            {"dim": m * n, "cap": settings.dense_hessian_cap},
        )

    def part(start: int, stop: int) -> np.ndarray:
        qg, xin = scaled_jacobians(model, data.inputs[start:stop], p)
        xt = extend_inputs(xin, include_bias)
        # rows of the per-sample Jacobian (Q G) ⊗ x̃^T
        jac = np.einsum("ski,sa->skia", qg, xt).reshape(-1, m * n)
        return jac.T @ jac

    total = chunked_sum(part, data.n_samples, threads, chunk_size=64)
    h = total / data.n_samples
    logger.debug(f"assembled dense layer-{p} Hessian of size {m * n}")
    return 0.5 * (h + h.T)


def full_gterm_operator(
    model: MlpModel,
    data: Dataset,
    include_bias: bool = True,
    threads: Optional[int] = None,
) -> LinearOperator:
    """Matrix-free G-term E[F^T A F] of the full Hessian over all layers' parameters."""
    check_inputs(model, data, 0)
    shapes = [model.layer_shape(p, include_bias) for p in range(model.num_layers)]

    def part(start: int, stop: int):
        cache = forward_batch(model, data.inputs[start:stop])
        q = q_factor_batch(cache.probs)
        qgs = [q @ logit_jacobians_batch(model, cache, p) for p in range(model.num_layers)]
        xts = [extend_inputs(cache.layer_inputs[p], include_bias) for p in range(model.num_layers)]
        return qgs, xts

    parts = map_chunks(part, data.n_samples, threads)
    qgs: List[np.ndarray] = [np.concatenate([ps[0][p] for ps in parts]) for p in range(model.num_layers)]
    xts: List[np.ndarray] = [np.concatenate([ps[1][p] for ps in parts]) for p in range(model.num_layers)]
    sizes = [m * n for m, n in shapes]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    count = data.n_samples

    def apply(v: np.ndarray) -> np.ndarray:
        logits = np.zeros((count, model.num_classes))
        for p, (m, n) in enumerate(shapes):
            block = v[offsets[p] : offsets[p + 1]].reshape(m, n)
            logits += np.einsum("scm,sm->sc", qgs[p], xts[p] @ block.T)
        out = []
        for p in range(model.num_layers):
            r = np.einsum("scm,sc->sm", qgs[p], logits)
            out.append((r.T @ xts[p]).ravel() / count)
        return np.concatenate(out)

    return LinearOperator(dim=int(offsets[-1]), apply=apply)
