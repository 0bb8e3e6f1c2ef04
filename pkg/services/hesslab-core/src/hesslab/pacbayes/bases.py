# =============================================================================
# hesslab - Layer-wise Hessian Eigenbases for the Posterior
# =============================================================================
"""
Per-layer orthonormal bases (U^(p), V^(p)) and the change of basis between
the standard parameter coordinates and the Kronecker eigenbasis.

For a layer block u^(p) viewed as the m × (n+1) matrix [W | b]:
    to_hessian:  U^T Mat(u) V
    to_standard: U Mat(v) V^T
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from ..core.errors import PreconditionError
from ..data.datasets import Dataset
from ..hessian.closed_form import closed_form_output_hessian, mean_softmax_hessian
from ..hessian.factors import input_autocorrelation, layer_factors
from ..linalg.dense import sym_eig_dense
from ..network.model import MlpModel


class Variant(str, Enum):
    """Which eigenbasis the posterior covariance is diagonal in."""

    BASE = "base"  # standard basis
    APPR = "appr"  # layer-wise Hessian basis computed once
    ITER = "iter"  # recomputed every eta epochs
    ITER_M = "iter_m"  # recomputed, with the closed-form output Hessian

    @property
    def recomputes(self) -> bool:
        return self in (Variant.ITER, Variant.ITER_M)


@dataclass(frozen=True)
class LayerBasis:
    u: np.ndarray
    v: np.ndarray
    out_values: Optional[np.ndarray] = None
    in_values: Optional[np.ndarray] = None

    @property
    def shape(self) -> tuple:
        return self.u.shape[0], self.v.shape[0]

    @property
    def size(self) -> int:
        m, n = self.shape
        return m * n

    def kron_values(self) -> Optional[np.ndarray]:
        """Approximate Hessian eigenvalue of every coordinate of this layer's eigenbasis."""
        if self.out_values is None or self.in_values is None:
            return None
        return np.outer(self.out_values, self.in_values).ravel()


Bases = List[LayerBasis]


def identity_bases(model: MlpModel) -> Bases:
    return [LayerBasis(np.eye(m), np.eye(n)) for m, n in (model.layer_shape(p) for p in range(model.num_layers))]


def compute_bases(model: MlpModel, data: Dataset, variant: Variant, threads: Optional[int] = None) -> Bases:
    """
    Eigenbases of E[M^(p)] and E[x̃^(p)x̃^(p)T] at the model's current parameters.

    ``ITER_M`` swaps E[M^(p)] for the closed-form 4^-(L-1-p) S^T E[A] S.
    """
    variant = Variant(variant)
    if variant is Variant.BASE:
        return identity_bases(model)
    bases: Bases = []
    a_tilde = mean_softmax_hessian(model, data, threads) if variant is Variant.ITER_M else None
    for p in range(model.num_layers):
        if a_tilde is None:
            f = layer_factors(model, data, p, include_bias=True, threads=threads)
            out_eig, in_eig = f.out_eig, f.in_eig
        else:
            out_eig = sym_eig_dense(closed_form_output_hessian(model, p, a_tilde))
            in_eig = sym_eig_dense(input_autocorrelation(model, data, p, include_bias=True, threads=threads))
        bases.append(LayerBasis(out_eig.vectors, in_eig.vectors, out_eig.values, in_eig.values))
    logger.debug(f"computed {variant.value} eigenbases for {model.num_layers} layers")
    return bases


def _split(vec: np.ndarray, bases: Sequence[LayerBasis]) -> List[np.ndarray]:
    vec = np.asarray(vec, dtype=np.float64)
    total = sum(b.size for b in bases)
    if vec.shape != (total,):
        raise PreconditionError("vector does not match the bases", {"size": vec.size, "expected": total})
    bounds = np.cumsum([0] + [b.size for b in bases])
    return [vec[bounds[i] : bounds[i + 1]].reshape(b.shape) for i, b in enumerate(bases)]


def to_hessian(u: np.ndarray, bases: Sequence[LayerBasis]) -> np.ndarray:
    return np.concatenate([(b.u.T @ block @ b.v).ravel() for block, b in zip(_split(u, bases), bases)])


def to_standard(v: np.ndarray, bases: Sequence[LayerBasis]) -> np.ndarray:
    return np.concatenate([(b.u @ block @ b.v.T).ravel() for block, b in zip(_split(v, bases), bases)])
