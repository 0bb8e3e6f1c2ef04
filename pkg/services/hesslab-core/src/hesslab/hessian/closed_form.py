# =============================================================================
# hesslab - Closed-form Output Hessians
# =============================================================================
"""
Closed-form output Hessians for networks whose ReLU gates are modeled as
independent fair coins: each hidden layer contributes a factor 1/4, giving
E[M^(k)] ≈ 4^-(L-1-k) S^(k)T Ã S^(k) with S^(k) the weight product above
layer k.
"""

from typing import Optional

import numpy as np

from ..core.errors import DimensionError
from ..core.parallel import chunked_sum
from ..data.datasets import Dataset
from ..network.model import MlpModel, forward_batch, softmax_hessian, softmax_hessian_batch
from .factors import check_inputs


def s_matrix(model: MlpModel, k: int) -> np.ndarray:
    """W^(L-1) W^(L-2) ... W^(k+1); the identity for the output layer."""
    model.check_layer(k)
    s = np.eye(model.num_classes)
    for q in range(model.num_layers - 1, k, -1):
        s = s @ model.weights[q]
    return s


def closed_form_output_hessian(model: MlpModel, k: int, a_tilde: np.ndarray) -> np.ndarray:
    c = model.num_classes
    a_tilde = np.asarray(a_tilde, dtype=np.float64)
    if a_tilde.shape != (c, c):
        raise DimensionError("Ã must be c x c", {"shape": a_tilde.shape, "c": c})
    s = s_matrix(model, k)
    m = 0.25 ** (model.num_layers - 1 - k) * (s.T @ a_tilde @ s)
    return 0.5 * (m + m.T)


def uniform_softmax_hessian(num_classes: int) -> np.ndarray:
    """A at the uniform distribution, (I − 11^T/c)/c."""
    return softmax_hessian(np.full(num_classes, 1.0 / num_classes))


def mean_softmax_hessian(model: MlpModel, data: Dataset, threads: Optional[int] = None) -> np.ndarray:
    """E[A] over the dataset."""
    check_inputs(model, data, model.num_layers - 1)

    def part(start: int, stop: int) -> np.ndarray:
        return softmax_hessian_batch(forward_batch(model, data.inputs[start:stop]).probs).sum(axis=0)

    return chunked_sum(part, data.n_samples, threads) / data.n_samples
