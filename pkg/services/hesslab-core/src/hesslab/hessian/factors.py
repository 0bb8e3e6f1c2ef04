# =============================================================================
# hesslab - Kronecker Factors of the Layer-wise Hessian
# =============================================================================
"""
Per-layer expectations E[M^(p)] = E[G^T A G] and E[x̃ x̃^T].

Both are accumulated as Gram matrices: with Q the square-root factor of A,
M_x = (Q G)^T (Q G), so E[M] is B^T B / N for the stacked rows B of Q G.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from loguru import logger

from ..core.errors import PreconditionError
from ..core.parallel import chunked_sum, map_chunks, tree_reduce
from ..data.datasets import Dataset
from ..linalg.dense import EigPairs, sym_eig_dense
from ..network.model import MlpModel, forward_batch, logit_jacobians_batch, q_factor_batch


@dataclass(frozen=True)
class LayerFactors:
    layer: int
    output_hessian: np.ndarray
    input_autocorr: np.ndarray
    out_eig: EigPairs
    in_eig: EigPairs
    include_bias: bool = True

    @classmethod
    def from_matrices(
        cls,
        output_hessian: np.ndarray,
        input_autocorr: np.ndarray,
        layer: int = 0,
        include_bias: bool = True,
    ) -> "LayerFactors":
        """Wrap given factor matrices (closed-form or synthetic) with their eigendecompositions."""
        out_h = np.asarray(output_hessian, dtype=np.float64)
        in_a = np.asarray(input_autocorr, dtype=np.float64)
        return cls(layer, out_h, in_a, sym_eig_dense(out_h), sym_eig_dense(in_a), include_bias)

    @property
    def out_dim(self) -> int:
        return int(self.output_hessian.shape[0])

    @property
    def in_dim(self) -> int:
        return int(self.input_autocorr.shape[0])


def extend_inputs(x: np.ndarray, include_bias: bool) -> np.ndarray:
    """Append the constant-1 coordinate that carries the bias."""
    if not include_bias:
        return x
    return np.hstack([x, np.ones((x.shape[0], 1))])


def scaled_jacobians(model: MlpModel, x: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-sample Q_x G_x^(p) as an (N, c, m) array, with the layer inputs x^(p)."""
    cache = forward_batch(model, x)
    g = logit_jacobians_batch(model, cache, p)
    return q_factor_batch(cache.probs) @ g, cache.layer_inputs[p]


def check_inputs(model: MlpModel, data: Dataset, p: int) -> None:
    model.check_layer(p)
    if data.n_samples == 0:
        raise PreconditionError("expectations need a nonempty dataset")
    if data.dim != model.layer_dims[0]:
        raise PreconditionError("dataset dim does not match the model", {"data": data.dim, "model": model.layer_dims[0]})


def _pair_sum(a, b):
    return tuple(x + y for x, y in zip(a, b))


def layer_factors(
    model: MlpModel,
    data: Dataset,
    p: int,
    include_bias: bool = True,
    threads: Optional[int] = None,
) -> LayerFactors:
    """Empirical E[M^(p)] and E[x̃^(p) x̃^(p)T] with their eigendecompositions."""
    check_inputs(model, data, p)
    m = model.layer_dims[p + 1]

    def part(start: int, stop: int):
        qg, xin = scaled_jacobians(model, data.inputs[start:stop], p)
        rows = qg.reshape(-1, m)
        xt = extend_inputs(xin, include_bias)
        return rows.T @ rows, xt.T @ xt

    out_sum, in_sum = tree_reduce(map_chunks(part, data.n_samples, threads), _pair_sum)
    n = data.n_samples
    output_hessian = 0.5 * (out_sum + out_sum.T) / n
    input_autocorr = 0.5 * (in_sum + in_sum.T) / n
    logger.debug(f"layer {p} factors: E[M] {output_hessian.shape}, E[xx^T] {input_autocorr.shape} over {n} samples")
    return LayerFactors(
        layer=p,
        output_hessian=output_hessian,
        input_autocorr=input_autocorr,
        out_eig=sym_eig_dense(output_hessian),
        in_eig=sym_eig_dense(input_autocorr),
        include_bias=include_bias,
    )


def input_mean(
    model: MlpModel,
    data: Dataset,
    p: int,
    include_bias: bool = True,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Ê[x̃^(p)], the mean (bias-extended) input of layer p."""
    check_inputs(model, data, p)

    def part(start: int, stop: int) -> np.ndarray:
        xin = forward_batch(model, data.inputs[start:stop]).layer_inputs[p]
        return extend_inputs(xin, include_bias).sum(axis=0)

    total = chunked_sum(part, data.n_samples, threads)
    return total / data.n_samples


def input_autocorrelation(
    model: MlpModel,
    data: Dataset,
    p: int,
    include_bias: bool = True,
    threads: Optional[int] = None,
) -> np.ndarray:
    """E[x̃^(p) x̃^(p)T] alone, without the output Hessian."""
    check_inputs(model, data, p)

    def part(start: int, stop: int) -> np.ndarray:
        xt = extend_inputs(forward_batch(model, data.inputs[start:stop]).layer_inputs[p], include_bias)
        return xt.T @ xt

    total = chunked_sum(part, data.n_samples, threads) / data.n_samples
    return 0.5 * (total + total.T)
