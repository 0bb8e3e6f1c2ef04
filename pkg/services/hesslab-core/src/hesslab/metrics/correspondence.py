# =============================================================================
# hesslab - Eigenvector Correspondence Matrices
# =============================================================================
"""
Correspondence between layer-Hessian eigenvectors h_j and the eigenvectors
of one Kronecker factor.

Input kind: entry (i, j) = ‖Mat(h_j) v_i‖² for eigenvectors v_i of E[x̃x̃^T].
Output kind: entry (i, j) = ‖Mat(h_j)^T u_i‖² for eigenvectors u_i of E[M].
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd

from ..core.errors import DimensionError

CorrespondenceKind = Literal["input", "output"]


@dataclass(frozen=True)
class CorrespondenceMatrix:
    kind: CorrespondenceKind
    data: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        """Long format, one row per (factor eigenvector i, Hessian eigenvector j)."""
        rows, cols = self.data.shape
        i, j = np.divmod(np.arange(rows * cols), cols)
        return pd.DataFrame({"i": i, "j": j, "value": self.data.ravel()})


def _stack(h_vecs: np.ndarray, m: int, n: int) -> np.ndarray:
    h_vecs = np.atleast_2d(np.asarray(h_vecs, dtype=np.float64))
    if h_vecs.shape[0] != m * n:
        raise DimensionError("Hessian eigenvectors must have length m*n", {"rows": h_vecs.shape[0], "m": m, "n": n})
    return h_vecs.T.reshape(h_vecs.shape[1], m, n)


def correspondence_input(h_vecs: np.ndarray, in_vecs: np.ndarray, m: int, n: int) -> CorrespondenceMatrix:
    mats = _stack(h_vecs, m, n)
    in_vecs = np.asarray(in_vecs, dtype=np.float64)
    if in_vecs.shape[0] != n:
        raise DimensionError("input eigenvectors must have length n", {"rows": in_vecs.shape[0], "n": n})
    projected = np.einsum("tmn,nr->tmr", mats, in_vecs)
    return CorrespondenceMatrix("input", np.sum(projected**2, axis=1).T)


def correspondence_output(h_vecs: np.ndarray, out_vecs: np.ndarray, m: int, n: int) -> CorrespondenceMatrix:
    mats = _stack(h_vecs, m, n)
    out_vecs = np.asarray(out_vecs, dtype=np.float64)
    if out_vecs.shape[0] != m:
        raise DimensionError("output eigenvectors must have length m", {"rows": out_vecs.shape[0], "m": m})
    projected = np.einsum("tmn,mr->tnr", mats, out_vecs)
    return CorrespondenceMatrix("output", np.sum(projected**2, axis=1).T)
