# =============================================================================
# hesslab - Lanczos Eigensolver for Implicit Symmetric Operators
# =============================================================================

from dataclasses import dataclass
from typing import Callable

import numpy as np
from loguru import logger
from scipy.linalg import eigh_tridiagonal

from ..core.errors import DimensionError, PreconditionError, SolverError
from ..core.random import make_rng
from .dense import EigPairs, sort_pairs

BREAKDOWN_TOL = 1e-12
MAX_RESTARTS = 3


@dataclass(frozen=True)
class LinearOperator:
    """A symmetric linear map given only by its action on vectors."""

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise DimensionError("operator input has wrong shape", {"dim": self.dim, "shape": v.shape})
        return self.apply(v)

    @classmethod
    def from_dense(cls, matrix: np.ndarray) -> "LinearOperator":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError("operator matrix must be square", {"shape": matrix.shape})
        return cls(dim=matrix.shape[0], apply=lambda v: matrix @ v)

    def to_dense(self) -> np.ndarray:
        """Materialize column by column (small operators only)."""
        eye = np.eye(self.dim)
        return np.column_stack([self(eye[:, j]) for j in range(self.dim)])


def _fresh_probe(rng: np.random.Generator, basis: list, dim: int) -> np.ndarray:
    q = rng.standard_normal(dim)
    if basis:
        stacked = np.asarray(basis)
        for _ in range(2):
            q -= stacked.T @ (stacked @ q)
    return q / np.linalg.norm(q)


def lanczos_topk(op: LinearOperator, k: int, iters: int, seed: int = 0) -> EigPairs:
    """
    Top-k eigenpairs of a symmetric operator.

    Every new Lanczos vector is fully re-orthogonalized (twice) against all
    stored vectors. On breakdown the iteration restarts from a fresh seeded
    probe orthogonal to the current basis.
    """
    dim = op.dim
    if not 1 <= k <= dim:
        raise PreconditionError("need 1 <= k <= dim", {"k": k, "dim": dim})
    if iters < k:
        raise PreconditionError("need iters >= k", {"k": k, "iters": iters})
    iters = min(iters, dim)

    rng = make_rng(seed)
    basis: list[np.ndarray] = [_fresh_probe(rng, [], dim)]
    alphas: list[float] = []
    betas: list[float] = []
    restarts = 0
    scale = 0.0

    while True:
        q = basis[-1]
        w = op(q)
        alpha = float(q @ w)
        alphas.append(alpha)
        stacked = np.asarray(basis)
        for _ in range(2):
            w = w - stacked.T @ (stacked @ w)
        beta = float(np.linalg.norm(w))
        scale = max(scale, abs(alpha), beta)
        if len(basis) >= iters:
            break
        if beta < BREAKDOWN_TOL * max(1.0, scale):
            if restarts >= MAX_RESTARTS:
                if len(basis) >= k:
                    logger.debug(f"lanczos: invariant subspace of size {len(basis)} after {restarts} restarts")
                    break
                raise SolverError(
                    "Lanczos breakdown persisted after restarts",
                    {"restarts": restarts, "basis": len(basis), "k": k},
                )
            restarts += 1
            logger.debug(f"lanczos: breakdown at step {len(basis)}, restart {restarts}")
            betas.append(0.0)
            basis.append(_fresh_probe(rng, basis, dim))
            continue
        betas.append(beta)
        basis.append(w / beta)

    theta, s = eigh_tridiagonal(np.asarray(alphas), np.asarray(betas))
    ritz = np.asarray(basis).T @ s
    pairs = sort_pairs(theta, ritz)
    return pairs.top(k)


def ritz_residuals(op: LinearOperator, pairs: EigPairs) -> np.ndarray:
    """‖A v_i − λ_i v_i‖ for every pair."""
    return np.array(
        [np.linalg.norm(op(pairs.vectors[:, i]) - pairs.values[i] * pairs.vectors[:, i]) for i in range(len(pairs))]
    )
