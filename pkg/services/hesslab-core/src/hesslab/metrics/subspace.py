# =============================================================================
# hesslab - Subspace Overlap and Matricization
# =============================================================================
"""
Overlap between eigenspaces and the vector/matrix views of layer
eigenvectors.

A layer eigenvector h of length m·n is viewed as the m × n matrix whose
rows are consecutive blocks of h, so that ``matricize(kron(u, v)) == outer(u, v)``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from ..core.errors import DimensionError, PreconditionError
from ..linalg.dense import max_orthonormality_error, svd_values

ORTHONORMAL_TOL = 1e-6


@dataclass(frozen=True)
class OverlapCurve:
    """Overlap as a function of the subspace dimension k."""

    dims: np.ndarray
    overlaps: np.ndarray
    stds: Optional[np.ndarray] = None
    baselines: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dims.shape != self.overlaps.shape:
            raise DimensionError("dims and overlaps differ in length", {"dims": self.dims.shape, "overlaps": self.overlaps.shape})

    def __len__(self) -> int:
        return int(self.dims.shape[0])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"k": self.dims.astype(np.int64), "mean": self.overlaps})
        frame["std"] = self.stds if self.stds is not None else 0.0
        if self.baselines is not None:
            frame["baseline"] = self.baselines
        return frame


def _check_orthonormal(q: np.ndarray, name: str) -> None:
    err = max_orthonormality_error(q)
    if err > ORTHONORMAL_TOL:
        raise PreconditionError(f"{name} does not have orthonormal columns", {"error": err})


def subspace_overlap(u: np.ndarray, v: np.ndarray) -> float:
    """
    ‖U^T V‖_F² / k for two k-dimensional subspaces.

    Args:
        u: (D, k) orthonormal basis
        v: (D, k) orthonormal basis

    Returns:
        The mean squared cosine of the canonical angles, in [0, 1].
    """
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    if u.shape != v.shape:
        raise DimensionError("bases must have the same shape", {"u": u.shape, "v": v.shape})
    if u.shape[1] == 0:
        raise PreconditionError("overlap of empty subspaces is undefined")
    _check_orthonormal(u, "U")
    _check_orthonormal(v, "V")
    return float(np.sum((u.T @ v) ** 2) / u.shape[1])


def random_overlap_baseline(k: int, dim: int) -> float:
    """Expected overlap of two uniformly random k-dimensional subspaces of R^dim."""
    return k / dim


def overlap_curve(u: np.ndarray, v: np.ndarray, dims: Optional[Sequence[int]] = None) -> OverlapCurve:
    """Overlap of the leading k columns of ``u`` and ``v`` for each k in ``dims``."""
    limit = min(u.shape[1], v.shape[1])
    ks = np.arange(1, limit + 1) if dims is None else np.asarray(list(dims), dtype=np.int64)
    if ks.size and (ks.min() < 1 or ks.max() > limit):
        raise PreconditionError("overlap dims out of range", {"max": limit})
    values = np.array([subspace_overlap(u[:, :k], v[:, :k]) for k in ks])
    baselines = np.array([random_overlap_baseline(int(k), u.shape[0]) for k in ks])
    return OverlapCurve(ks, values, baselines=baselines)


def matricize(h: np.ndarray, m: int, n: int) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 1 or h.size != m * n:
        raise PreconditionError("vector length does not equal m*n", {"size": h.size, "m": m, "n": n})
    return h.reshape(m, n)


def vectorize(mat: np.ndarray) -> np.ndarray:
    return np.asarray(mat, dtype=np.float64).ravel()


def top_singular_ratio(h: np.ndarray, m: int, n: int) -> float:
    """‖Mat(h)‖_2 / ‖Mat(h)‖_F; 1 exactly for rank-one eigenvectors."""
    mat = matricize(h, m, n)
    fro = float(np.linalg.norm(mat))
    if fro == 0.0:
        raise PreconditionError("top singular ratio of the zero vector")
    return min(1.0, float(svd_values(mat)[0]) / fro)
