# =============================================================================
# hesslab - PAC-Bayes Objective
# =============================================================================
"""
KL divergence between the diagonal-in-eigenbasis posterior and the isotropic
prior, the B_RE bound term with its union bound over the prior-scale grid,
and Bernoulli KL inversion.

Posterior Q = N(w, diag(s)) with s = exp(2ς); prior P = N(θ0, λI) with
λ = exp(2ϱ).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import xlogy

from ..core.errors import DomainError, PreconditionError
from .bases import LayerBasis, to_hessian

# Defaults used for the bound: confidence δ, grid precision b, prior-scale cap c_λ
DEFAULT_DELTA = 0.025
DEFAULT_B_PREC = 100
DEFAULT_C_LAMBDA = 0.1

KL_INV_TOL = 1e-12
KL_INV_MAX_ITER = 200


def kl_q_p(
    w: np.ndarray,
    varsigma: np.ndarray,
    varrho: float,
    theta0: np.ndarray,
    bases: Optional[Sequence[LayerBasis]] = None,
) -> float:
    """
    KL(Q ‖ P) = ½[(Σs + ‖w − θ0‖²)/λ − P + Σ log(λ/s)].

    The prior is isotropic, so the mean difference may be measured in either
    basis; pass ``bases`` to measure it in the eigenbasis.
    """
    w = np.asarray(w, dtype=np.float64)
    varsigma = np.asarray(varsigma, dtype=np.float64)
    if w.shape != varsigma.shape or w.shape != np.shape(theta0):
        raise PreconditionError("w, varsigma and theta0 must have the same shape")
    diff = w - theta0
    if bases is not None:
        diff = to_hessian(diff, bases)
    lam = np.exp(2.0 * varrho)
    s = np.exp(2.0 * varsigma)
    return float(0.5 * ((np.sum(s) + diff @ diff) / lam - w.size + np.sum(2.0 * varrho - 2.0 * varsigma)))


def _grid_log_term(varrho: float, c_lambda: float) -> float:
    lam = np.exp(2.0 * varrho)
    if lam >= c_lambda:
        raise DomainError("prior scale must stay below c_lambda", {"lambda": float(lam), "c_lambda": c_lambda})
    return float(np.log(c_lambda / lam))


def b_re_value(
    kl: float,
    varrho: float,
    dataset_size: int,
    delta: float = DEFAULT_DELTA,
    b_prec: float = DEFAULT_B_PREC,
    c_lambda: float = DEFAULT_C_LAMBDA,
) -> float:
    if dataset_size < 2:
        raise PreconditionError("B_RE needs at least two samples", {"dataset_size": dataset_size})
    log_ratio = _grid_log_term(varrho, c_lambda)
    union = 2.0 * np.log(b_prec * log_ratio) + np.log(np.pi**2 * dataset_size / (6.0 * delta))
    return float((kl + union) / (dataset_size - 1))


def b_re(
    state,
    dataset_size: int,
    delta: float = DEFAULT_DELTA,
    b_prec: float = DEFAULT_B_PREC,
    c_lambda: float = DEFAULT_C_LAMBDA,
) -> float:
    """B_RE for a :class:`PacBayesState`."""
    kl = kl_q_p(state.w, state.varsigma, state.varrho, state.theta0)
    return b_re_value(kl, state.varrho, dataset_size, delta, b_prec, c_lambda)


@dataclass(frozen=True)
class ObjectiveTerms:
    """R = sqrt(B_RE / 2) and its gradients in (w, ς, ϱ)."""

    kl: float
    b_re: float
    r: float
    grad_w: np.ndarray
    grad_varsigma: np.ndarray
    grad_varrho: float


def objective_terms(
    w: np.ndarray,
    varsigma: np.ndarray,
    varrho: float,
    theta0: np.ndarray,
    dataset_size: int,
    delta: float = DEFAULT_DELTA,
    b_prec: float = DEFAULT_B_PREC,
    c_lambda: float = DEFAULT_C_LAMBDA,
) -> ObjectiveTerms:
    kl = kl_q_p(w, varsigma, varrho, theta0)
    b = b_re_value(kl, varrho, dataset_size, delta, b_prec, c_lambda)
    if b <= 0.0:
        raise DomainError("B_RE is not positive", {"b_re": b})
    r = float(np.sqrt(0.5 * b))
    lam = np.exp(2.0 * varrho)
    s = np.exp(2.0 * varsigma)
    diff = w - theta0
    scale = 1.0 / (4.0 * r * (dataset_size - 1))  # dR/dB times dB/dKL
    log_ratio = _grid_log_term(varrho, c_lambda)
    d_rho = -(np.sum(s) + diff @ diff) / lam + w.size - 4.0 / log_ratio
    return ObjectiveTerms(
        kl=kl,
        b_re=b,
        r=r,
        grad_w=scale * diff / lam,
        grad_varsigma=scale * (s / lam - 1.0),
        grad_varrho=float(scale * d_rho),
    )


def kl_bernoulli(q: float, p: float) -> float:
    """KL(Bernoulli(q) ‖ Bernoulli(p)), with 0 log 0 = 0."""
    q = float(np.clip(q, 0.0, 1.0))
    p = float(np.clip(p, 0.0, 1.0))
    if (p == 0.0 and q > 0.0) or (p == 1.0 and q < 1.0):
        return float("inf")
    return float(xlogy(q, q) - xlogy(q, p) + xlogy(1.0 - q, 1.0 - q) - xlogy(1.0 - q, 1.0 - p))


def kl_inverse(q: float, budget: float) -> float:
    """Largest p in [q, 1] with KL(q ‖ p) <= budget, by bisection."""
    q = float(np.clip(q, 0.0, 1.0))
    if budget < 0:
        raise PreconditionError("KL budget must be nonnegative", {"budget": budget})
    if budget == 0.0 or q == 1.0:
        return q
    lo, hi = q, 1.0
    for _ in range(KL_INV_MAX_ITER):
        if hi - lo <= KL_INV_TOL:
            break
        mid = 0.5 * (lo + hi)
        if kl_bernoulli(q, mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo
