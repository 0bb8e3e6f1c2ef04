# =============================================================================
# hesslab - Rank-(c−1) Output Hessian Checks
# =============================================================================
"""
Empirical checks that the output Hessian of a hidden layer is close to rank
c − 1 with its top eigenspace in the row space of the weights above it,
minus the direction those weights assign to the all-one vector.

The two-layer check runs at random Gaussian initialization on Gaussian
inputs; :func:`multilayer_overlap` applies the same target construction to
the weight product S^(p) of any model.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field

from ..core.config import settings
from ..core.errors import CapacityError, DegeneracyError, PreconditionError
from ..core.parallel import chunked_sum
from ..core.random import make_rng
from ..data.datasets import Dataset
from ..hessian.closed_form import mean_softmax_hessian, s_matrix
from ..hessian.factors import layer_factors
from ..linalg.dense import orthonormalize, svd_values, sym_eig_dense
from ..metrics.subspace import subspace_overlap
from ..network.model import MlpModel, forward_batch, init_gaussian_rowscaled

RANK_TOL = 1e-8


class TheoremReport(BaseModel):
    n: int
    d: int
    c: int
    n_samples: int
    seed: int
    eig_ratio: float = Field(ge=0.0, description="λ_c / λ_{c-1} of E[M]")
    overlap: float = Field(ge=0.0, le=1.0, description="top-(c-1) eigenspace vs the target subspace")
    decoupled_distance: float = Field(ge=0.0, description="‖E[M] − M*‖_F / ‖E[M]‖_F")
    null_direction_ratio: float = Field(ge=0.0, description="‖E[M] q‖ / λ_1 for the pulled-back all-one direction")
    runtime_secs: float = 0.0


def target_subspace(w: np.ndarray) -> np.ndarray:
    """
    Orthonormal basis of R(W^T) with the direction of W^T 1 removed.

    Args:
        w: (c, n) matrix with c <= n and full row rank

    Returns:
        (n, c - 1) matrix with orthonormal columns.
    """
    w = np.asarray(w, dtype=np.float64)
    c, n = w.shape
    if c > n:
        raise PreconditionError("target subspace needs at least as many columns as rows", {"c": c, "n": n})
    sv = svd_values(w)
    if sv[0] == 0.0 or sv[c - 1] / sv[0] < RANK_TOL:
        raise DegeneracyError("weight matrix is rank deficient", {"sigma_min_over_max": float(sv[c - 1] / max(sv[0], 1e-300))})

    rows = orthonormalize(w.T)
    if rows.shape[1] != c:
        raise DegeneracyError("row space lost dimensions during orthonormalization", {"kept": rows.shape[1], "c": c})
    pulled = rows @ (rows.T @ (w.T @ np.ones(c)))
    t = pulled / np.linalg.norm(pulled)
    deflated = rows - np.outer(t, t @ rows)
    basis = orthonormalize(deflated)
    if basis.shape[1] != c - 1:
        raise DegeneracyError("deflated row space does not have dimension c-1", {"kept": basis.shape[1], "c": c})
    return basis


def theorem_problem(n: int, d: int, c: int, n_samples: int, seed: int) -> Tuple[MlpModel, Dataset]:
    """Random two-layer network (d, n, c) and standard normal inputs, on separate streams."""
    model = init_gaussian_rowscaled((d, n, c), seed)
    inputs = make_rng(seed, 1).standard_normal((n_samples, d))
    labels = make_rng(seed, 2).integers(0, c, size=n_samples)
    return model, Dataset(inputs, labels, c, name="gaussian")


def coupled_output_hessian(model: MlpModel, data: Dataset, threads: Optional[int] = None) -> np.ndarray:
    """
    E[D W^T A W D] for the first layer of a two-layer network.

    Accumulated per output class: Σ_k (w_k w_k^T) ⊙ (D^T diag(p_k) D) − R^T R
    with R = (P W) ⊙ D, which never forms a per-sample Jacobian.
    """
    if model.num_layers != 2:
        raise PreconditionError("coupled output Hessian is defined for two-layer networks", {"layers": model.num_layers})
    w2 = model.weights[1]

    def part(start: int, stop: int) -> np.ndarray:
        cache = forward_batch(model, data.inputs[start:stop])
        mask, probs = cache.relu_masks[0], cache.probs
        r = (probs @ w2) * mask
        acc = -(r.T @ r)
        for k in range(w2.shape[0]):
            acc += np.outer(w2[k], w2[k]) * ((mask * probs[:, k : k + 1]).T @ mask)
        return acc

    m = chunked_sum(part, data.n_samples, threads) / data.n_samples
    return 0.5 * (m + m.T)


def decoupled_output_hessian(w: np.ndarray, a_tilde: np.ndarray) -> np.ndarray:
    """M* = (W^T Ã W + diag(W^T Ã W)) / 4, the coin-flip-gate approximation."""
    b = w.T @ a_tilde @ w
    return 0.25 * (b + np.diag(np.diag(b)))


def run_theorem_check(n: int, d: int, c: int, n_samples: int, seed: int, threads: Optional[int] = None) -> TheoremReport:
    if n < c or c < 2:
        raise PreconditionError("need n >= c >= 2", {"n": n, "c": c})
    if n > settings.theorem_max_width:
        raise CapacityError("hidden width exceeds the theorem-check cap", {"n": n, "cap": settings.theorem_max_width})
    started = time.perf_counter()
    model, data = theorem_problem(n, d, c, n_samples, seed)
    w2 = model.weights[1]

    m1 = coupled_output_hessian(model, data, threads)
    eig = sym_eig_dense(m1)
    lam = eig.values
    eig_ratio = max(float(lam[c - 1] / lam[c - 2]), 0.0)
    overlap = subspace_overlap(eig.vectors[:, : c - 1], target_subspace(w2))

    top_c = eig.vectors[:, :c]
    q = top_c @ (top_c.T @ (w2.T @ np.ones(c)))
    q /= np.linalg.norm(q)
    null_ratio = float(np.linalg.norm(m1 @ q) / lam[0])

    m_star = decoupled_output_hessian(w2, mean_softmax_hessian(model, data, threads))
    distance = float(np.linalg.norm(m1 - m_star) / np.linalg.norm(m1))

    report = TheoremReport(
        n=n,
        d=d,
        c=c,
        n_samples=n_samples,
        seed=seed,
        eig_ratio=eig_ratio,
        overlap=min(max(overlap, 0.0), 1.0),
        decoupled_distance=distance,
        null_direction_ratio=null_ratio,
        runtime_secs=time.perf_counter() - started,
    )
    logger.info(f"theorem check n={n} d={d} c={c} N={n_samples} seed={seed}: ratio {eig_ratio:.4f}, overlap {report.overlap:.4f}")
    return report


def multilayer_overlap(model: MlpModel, data: Dataset, p: int, threads: Optional[int] = None) -> float:
    """Overlap of the top-(c−1) eigenspace of E[M^(p)] with R(S^(p)T) minus S^(p)T 1."""
    c = model.num_classes
    target = target_subspace(s_matrix(model, p))
    factors = layer_factors(model, data, p, include_bias=False, threads=threads)
    return subspace_overlap(factors.out_eig.vectors[:, : c - 1], target)


def theorem_grid(
    widths: Sequence[int],
    dims: Sequence[int],
    c: int,
    n_samples: int,
    seeds: Sequence[int],
    threads: Optional[int] = None,
) -> List[TheoremReport]:
    """Runs every (n, d, seed) cell; reports come back in sorted cell order."""
    cells = sorted(product(widths, dims, seeds))
    workers = threads or settings.threads
    if workers <= 1:
        return [run_theorem_check(n, d, c, n_samples, s) for n, d, s in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda cell: run_theorem_check(cell[0], cell[1], c, n_samples, cell[2]), cells))


def grid_frame(reports: Sequence[TheoremReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "n": r.n,
                "d": r.d,
                "c": r.c,
                "N": r.n_samples,
                "seed": r.seed,
                "eig_ratio": r.eig_ratio,
                "overlap": r.overlap,
                "decoupled_distance": r.decoupled_distance,
            }
            for r in reports
        ]
    )
