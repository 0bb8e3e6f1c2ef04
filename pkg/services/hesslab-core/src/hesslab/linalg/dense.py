# =============================================================================
# hesslab - Dense Symmetric Linear Algebra
# =============================================================================
"""
Dense real linear algebra on ``float64`` arrays.

Small symmetric problems are solved with cyclic Jacobi rotations; larger ones
go to LAPACK through :func:`numpy.linalg.eigh`. Either way the result is an
:class:`EigPairs` with descending values and a fixed eigenvector sign.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from loguru import logger
from scipy.linalg import subspace_angles

from ..core.config import settings
from ..core.errors import CapacityError, DimensionError, SolverError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 64
NEGLIGIBLE = 1e-18
THETA_HUGE = 1e150
DROP_TOL = 1e-10


@dataclass(frozen=True)
class EigPairs:
    """Eigenvalues (descending) with unit eigenvectors as columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.values.shape[0]:
            raise DimensionError(
                "eigenvector matrix does not match eigenvalue count",
                {"values": self.values.shape, "vectors": self.vectors.shape},
            )

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[0])

    def top(self, k: int) -> "EigPairs":
        return EigPairs(self.values[:k].copy(), self.vectors[:, :k].copy())


def ensure_finite(a: np.ndarray, what: str = "result") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise SolverError(f"non-finite entries in {what}")
    return a


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive (ties: lowest index)."""
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def sort_pairs(values: np.ndarray, vectors: np.ndarray) -> EigPairs:
    order = np.argsort(-values, kind="stable")
    return EigPairs(values[order].copy(), fix_signs(vectors[:, order]))


def _rotation(app: float, aqq: float, apq: float) -> Tuple[float, float]:
    """Cosine and sine of the rotation that zeroes a[p, q]; tan is the smaller root."""
    theta = (aqq - app) / (2.0 * apq)
    if abs(theta) > THETA_HUGE:
        t = 1.0 / (2.0 * theta)
    else:
        t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    return c, t * c


def _off_norm(a: np.ndarray) -> float:
    return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))


def _jacobi(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    for sweep in range(JACOBI_MAX_SWEEPS):
        if _off_norm(a) < JACOBI_TOL * scale:
            logger.debug(f"jacobi converged after {sweep} sweeps (n={n})")
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                # below rounding of both diagonal entries: drop it
                if abs(apq) <= NEGLIGIBLE * max(abs(a[p, p]), abs(a[q, q])) or apq == 0.0:
                    a[p, q] = a[q, p] = 0.0
                    continue
                c, s = _rotation(a[p, p], a[q, q], apq)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    raise SolverError(
        "cyclic Jacobi did not converge", {"n": n, "sweeps": JACOBI_MAX_SWEEPS, "off": _off_norm(a) / scale}
    )


def sym_eig_dense(a: np.ndarray, method: str = "auto") -> EigPairs:
    """
    Full eigendecomposition of a symmetric matrix.

    The input is symmetrized as (A + A^T)/2 first. ``method`` is ``"jacobi"``,
    ``"lapack"`` or ``"auto"``. Auto uses Jacobi up to ``settings.jacobi_max_dim``
    (default 32) and LAPACK above it. Jacobi handles any size, but its Python
    rotation loop is O(n^3) per sweep, so it is only the default for small
    factors (c x c output Hessians, narrow hidden layers). Raise
    ``HESSLAB_JACOBI_MAX_DIM`` to route larger matrices through it.
    Jacobi stops when the off-diagonal Frobenius norm drops below 1e-12 ||A||_F.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("sym_eig_dense needs a square matrix", {"shape": a.shape})
    ensure_finite(a, "input matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    if method == "auto":
        method = "jacobi" if n <= settings.jacobi_max_dim else "lapack"
    if method == "jacobi":
        values, vectors = _jacobi(a)
    elif method == "lapack":
        try:
            values, vectors = np.linalg.eigh(a)
        except np.linalg.LinAlgError as e:
            raise SolverError(f"LAPACK eigh failed: {e}", {"n": n}) from e
    else:
        raise ValueError(f"unknown eigen method: {method}")
    return sort_pairs(ensure_finite(values), ensure_finite(vectors))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with entry (i1*rows(B)+i2, j1*cols(B)+j2) = A[i1,j1]*B[i2,j2]."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > settings.kron_max_dim:
        raise CapacityError(
            "Kronecker product too large to materialize",
            {"rows": rows, "cols": cols, "cap": settings.kron_max_dim},
        )
    return np.kron(a, b)


def svd_values(a: np.ndarray) -> np.ndarray:
    """Singular values, descending, as square roots of the smaller Gram matrix's spectrum."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    gram = a.T @ a if a.shape[1] <= a.shape[0] else a @ a.T
    values = sym_eig_dense(gram).values
    return np.sqrt(np.clip(values, 0.0, None))


def gram_schmidt(v: np.ndarray, tol: float = DROP_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """
    Modified Gram-Schmidt with one re-orthogonalization pass.

    Returns the orthonormal columns and the indices of the input columns that
    survived; a column is dropped when its residual norm falls below the
    absolute ``tol``. Normalize the input columns first when their scale
    matters for the drop decision.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    basis = []
    kept = []
    for j in range(v.shape[1]):
        col = v[:, j].copy()
        for _ in range(2):
            for q in basis:
                col -= (q @ col) * q
        norm = float(np.linalg.norm(col))
        if norm < tol:
            continue
        basis.append(col / norm)
        kept.append(j)
    q = np.column_stack(basis) if basis else np.zeros((v.shape[0], 0))
    return q, np.asarray(kept, dtype=np.int64)


def orthonormalize(v: np.ndarray, tol: float = DROP_TOL) -> np.ndarray:
    return gram_schmidt(v, tol)[0]


def max_orthonormality_error(q: np.ndarray) -> float:
    """‖Q^T Q − I‖_∞ (entrywise max)."""
    if q.shape[1] == 0:
        return 0.0
    return float(np.max(np.abs(q.T @ q - np.eye(q.shape[1]))))


def subspace_projector(q: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column span of ``q``."""
    q = orthonormalize(q)
    return q @ q.T


def canonical_angles(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Principal angles between the column spans of ``u`` and ``v``, ascending."""
    return np.sort(subspace_angles(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64)))
