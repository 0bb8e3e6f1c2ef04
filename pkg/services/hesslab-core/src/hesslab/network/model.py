# =============================================================================
# hesslab - Fully-Connected ReLU Classifier
# =============================================================================
"""
A fully-connected ReLU network with softmax cross-entropy loss.

Layers are indexed from 0; layer ``p`` maps ``x^(p)`` (width ``layer_dims[p]``)
to ``z^(p) = W^(p) x^(p) + b^(p)`` (width ``layer_dims[p + 1]``), and hidden
layers feed ``relu(z^(p))`` forward. The flat parameter vector stores each
layer as the extended matrix ``[W | b]`` in row-major order.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from ..core.errors import DimensionError, PreconditionError
from ..core.random import make_rng


@dataclass
class MlpModel:
    layer_dims: Tuple[int, ...]
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if len(self.layer_dims) < 2:
            raise PreconditionError("a model needs at least input and output dims", {"layer_dims": self.layer_dims})
        for p, (w, b) in enumerate(zip(self.weights, self.biases)):
            m, n = self.layer_dims[p + 1], self.layer_dims[p]
            if w.shape != (m, n) or b.shape != (m,):
                raise DimensionError(
                    f"layer {p} parameters have the wrong shape",
                    {"weight": w.shape, "bias": b.shape, "expected": (m, n)},
                )
        if len(self.weights) != self.num_layers or len(self.biases) != self.num_layers:
            raise DimensionError("parameter lists do not match layer_dims", {"layer_dims": self.layer_dims})

    @property
    def num_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]

    def layer_shape(self, p: int, include_bias: bool = True) -> Tuple[int, int]:
        self.check_layer(p)
        return self.layer_dims[p + 1], self.layer_dims[p] + (1 if include_bias else 0)

    @property
    def param_count(self) -> int:
        return sum(m * n for m, n in (self.layer_shape(p) for p in range(self.num_layers)))

    def layer_slices(self) -> List[slice]:
        slices, start = [], 0
        for p in range(self.num_layers):
            m, n = self.layer_shape(p)
            slices.append(slice(start, start + m * n))
            start += m * n
        return slices

    def check_layer(self, p: int) -> None:
        if not 0 <= p < self.num_layers:
            raise PreconditionError("layer index out of range", {"layer": p, "num_layers": self.num_layers})

    def flatten(self) -> np.ndarray:
        return pack_params(self.weights, self.biases)

    def with_params(self, flat: np.ndarray) -> "MlpModel":
        weights, biases = unpack_params(self.layer_dims, flat)
        return MlpModel(self.layer_dims, weights, biases)

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) and np.all(np.isfinite(b)) for w, b in zip(self.weights, self.biases))


@dataclass
class ParamGrad:
    """Gradient with the same per-layer shapes as the model's parameters."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def flatten(self) -> np.ndarray:
        return pack_params(self.weights, self.biases)


@dataclass
class SampleCache:
    layer_inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]
    relu_masks: List[np.ndarray]
    probs: np.ndarray
    label: int


@dataclass
class BatchCache:
    """Forward quantities for a block of samples (one row per sample)."""

    layer_inputs: List[np.ndarray]
    pre_activations: List[np.ndarray]
    relu_masks: List[np.ndarray]
    probs: np.ndarray
    labels: Optional[np.ndarray] = field(default=None)


def pack_params(weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.hstack([w, b[:, None]]).ravel() for w, b in zip(weights, biases)])


def unpack_params(layer_dims: Sequence[int], flat: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    flat = np.asarray(flat, dtype=np.float64)
    weights, biases, start = [], [], 0
    for p in range(len(layer_dims) - 1):
        m, n = layer_dims[p + 1], layer_dims[p]
        block = flat[start : start + m * (n + 1)]
        if block.size != m * (n + 1):
            raise DimensionError("flat parameter vector too short", {"size": flat.size})
        block = block.reshape(m, n + 1)
        weights.append(block[:, :n].copy())
        biases.append(block[:, n].copy())
        start += m * (n + 1)
    if start != flat.size:
        raise DimensionError("flat parameter vector too long", {"size": flat.size, "expected": start})
    return weights, biases


# =============================================================================
# Initialization
# =============================================================================


def _check_dims(layer_dims: Sequence[int]) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or min(dims) < 1:
        raise PreconditionError("layer_dims needs at least two positive widths", {"layer_dims": dims})
    return dims


def init_xavier(layer_dims: Sequence[int], seed: int) -> MlpModel:
    """Xavier-uniform weights on ±sqrt(6/(m+n)), zero biases."""
    dims = _check_dims(layer_dims)
    rng = make_rng(seed)
    weights, biases = [], []
    for p in range(len(dims) - 1):
        m, n = dims[p + 1], dims[p]
        bound = np.sqrt(6.0 / (m + n))
        weights.append(rng.uniform(-bound, bound, size=(m, n)))
        biases.append(np.zeros(m))
    return MlpModel(dims, weights, biases)


def init_gaussian_rowscaled(layer_dims: Sequence[int], seed: int) -> MlpModel:
    """Weights i.i.d. N(0, 1/n) for a layer with input width n, zero biases."""
    dims = _check_dims(layer_dims)
    rng = make_rng(seed)
    weights, biases = [], []
    for p in range(len(dims) - 1):
        m, n = dims[p + 1], dims[p]
        weights.append(rng.standard_normal((m, n)) / np.sqrt(n))
        biases.append(np.zeros(m))
    return MlpModel(dims, weights, biases)


# =============================================================================
# Forward / Backward
# =============================================================================


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def forward(model: MlpModel, x: np.ndarray, label: int) -> SampleCache:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.layer_dims[0],):
        raise PreconditionError("input has the wrong dimension", {"expected": model.layer_dims[0], "shape": x.shape})
    if not 0 <= label < model.num_classes:
        raise PreconditionError("label out of range", {"label": label, "num_classes": model.num_classes})
    inputs, pre, masks = [x], [], []
    for p in range(model.num_layers):
        z = model.weights[p] @ inputs[-1] + model.biases[p]
        pre.append(z)
        if p < model.num_layers - 1:
            mask = (z > 0).astype(np.float64)
            masks.append(mask)
            inputs.append(z * mask)
    return SampleCache(inputs, pre, masks, softmax(pre[-1]), int(label))


def loss(cache: SampleCache) -> float:
    """Cross-entropy from the logits; finite even when the softmax underflows."""
    z = cache.pre_activations[-1]
    return float(logsumexp(z) - z[cache.label])


def logit_gradient(probs: np.ndarray, label: int) -> np.ndarray:
    g = probs.copy()
    g[label] -= 1.0
    return g


def grad(model: MlpModel, cache: SampleCache) -> ParamGrad:
    """Backprop of the cross-entropy loss; the logit gradient is p − y."""
    delta = logit_gradient(cache.probs, cache.label)
    weights: List[np.ndarray] = [np.empty(0)] * model.num_layers
    biases: List[np.ndarray] = [np.empty(0)] * model.num_layers
    for p in reversed(range(model.num_layers)):
        weights[p] = np.outer(delta, cache.layer_inputs[p])
        biases[p] = delta.copy()
        if p > 0:
            delta = (model.weights[p].T @ delta) * cache.relu_masks[p - 1]
    return ParamGrad(weights, biases)


def forward_batch(model: MlpModel, x: np.ndarray, labels: Optional[np.ndarray] = None) -> BatchCache:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.layer_dims[0]:
        raise PreconditionError("batch has the wrong input dimension", {"expected": model.layer_dims[0], "shape": x.shape})
    inputs, pre, masks = [x], [], []
    for p in range(model.num_layers):
        z = inputs[-1] @ model.weights[p].T + model.biases[p]
        pre.append(z)
        if p < model.num_layers - 1:
            mask = (z > 0).astype(np.float64)
            masks.append(mask)
            inputs.append(z * mask)
    return BatchCache(inputs, pre, masks, softmax(pre[-1]), labels)


def batch_losses(cache: BatchCache) -> np.ndarray:
    z = cache.pre_activations[-1]
    return logsumexp(z, axis=1) - z[np.arange(z.shape[0]), cache.labels]


def loss_and_grad(model: MlpModel, x: np.ndarray, labels: np.ndarray) -> Tuple[float, ParamGrad]:
    """Mean cross-entropy over a batch and its exact gradient."""
    labels = np.asarray(labels, dtype=np.int64)
    cache = forward_batch(model, x, labels)
    n = x.shape[0]
    delta = cache.probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    weights: List[np.ndarray] = [np.empty(0)] * model.num_layers
    biases: List[np.ndarray] = [np.empty(0)] * model.num_layers
    for p in reversed(range(model.num_layers)):
        weights[p] = delta.T @ cache.layer_inputs[p]
        biases[p] = delta.sum(axis=0)
        if p > 0:
            delta = (delta @ model.weights[p]) * cache.relu_masks[p - 1]
    return float(np.mean(batch_losses(cache))), ParamGrad(weights, biases)


def predict(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return np.argmax(forward_batch(model, x).pre_activations[-1], axis=1)


def classification_error(model: MlpModel, x: np.ndarray, labels: np.ndarray) -> float:
    """Empirical 0-1 error."""
    if x.shape[0] == 0:
        return 0.0
    return float(np.mean(predict(model, x) != labels))


# =============================================================================
# Per-sample Hessian ingredients
# =============================================================================


def softmax_hessian(probs: np.ndarray) -> np.ndarray:
    """A = diag(p) − p p^T."""
    p = np.asarray(probs, dtype=np.float64)
    return np.diag(p) - np.outer(p, p)


def softmax_hessian_batch(probs: np.ndarray) -> np.ndarray:
    eye = np.eye(probs.shape[1])
    return probs[:, :, None] * eye[None] - probs[:, :, None] * probs[:, None, :]


def q_factor(probs: np.ndarray) -> np.ndarray:
    """Q = diag(sqrt p)(I − 1 p^T), so that Q^T Q = A."""
    p = np.asarray(probs, dtype=np.float64)
    c = p.shape[0]
    return np.sqrt(p)[:, None] * (np.eye(c) - np.outer(np.ones(c), p))


def q_factor_batch(probs: np.ndarray) -> np.ndarray:
    c = probs.shape[1]
    centered = np.eye(c)[None] - probs[:, None, :]
    return np.sqrt(probs)[:, :, None] * centered


def logit_jacobian(model: MlpModel, cache: SampleCache, p: int) -> np.ndarray:
    """G^(p) = ∂z/∂z^(p) = W^(L-1) D^(L-2) ... W^(p+1) D^(p); identity for the output layer."""
    model.check_layer(p)
    g = np.eye(model.num_classes)
    for q in range(model.num_layers - 2, p - 1, -1):
        g = (g @ model.weights[q + 1]) * cache.relu_masks[q][None, :]
    return g


def logit_jacobians_batch(model: MlpModel, cache: BatchCache, p: int) -> np.ndarray:
    """Per-sample G^(p) stacked as an (N, c, m^(p)) array."""
    model.check_layer(p)
    n = cache.probs.shape[0]
    g = np.broadcast_to(np.eye(model.num_classes), (n, model.num_classes, model.num_classes))
    for q in range(model.num_layers - 2, p - 1, -1):
        g = (g @ model.weights[q + 1]) * cache.relu_masks[q][:, None, :]
    return np.array(g, copy=True)
