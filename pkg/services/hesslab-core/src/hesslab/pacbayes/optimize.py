# =============================================================================
# hesslab - PAC-Bayes Bound Optimization and Evaluation
# =============================================================================
"""
Optimizes a Gaussian posterior whose covariance is diagonal in the
layer-wise Hessian eigenbasis, then certifies its error with a Monte-Carlo
estimate and two KL inversions.

Random streams: minibatch order uses ``make_rng(seed, 0, epoch)``, the
reparameterization noise ``make_rng(seed, 1)`` and posterior sample ``i`` of
the final bound ``make_rng(seed, 2, i)``.
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field
from scipy.stats import spearmanr

from ..core.errors import DomainError, OptimizationError, PreconditionError
from ..core.parallel import chunked_sum
from ..core.random import make_rng
from ..data.datasets import Dataset
from ..network.model import MlpModel, classification_error, loss_and_grad
from .bases import Bases, Variant, compute_bases, identity_bases, to_hessian, to_standard
from .objective import (
    DEFAULT_B_PREC,
    DEFAULT_C_LAMBDA,
    DEFAULT_DELTA,
    b_re_value,
    kl_inverse,
    kl_q_p,
    objective_terms,
)

INIT_VARRHO = -3.0
# floor for |w| when initializing ς = log|w|, so zero parameters get a finite log-std
MIN_INIT_STD = 1e-8

DEFAULT_MC_ITERS = 50000
DEFAULT_MC_FREQ = 100
DEFAULT_DELTA_PRIME = 0.01


@dataclass
class PacBayesState:
    """
    Posterior N(w, diag(exp(2ς))) in the eigenbasis and prior N(θ0, exp(2ϱ) I).

    ``objective_trace`` holds the surrogate objective (sampled loss + R) of
    every optimization step so far.
    """

    w: np.ndarray
    varsigma: np.ndarray
    varrho: float
    theta0: np.ndarray
    bases: Bases
    objective_trace: List[float] = field(default_factory=list)

    def __post_init__(self):
        if self.w.shape != self.varsigma.shape or self.w.shape != self.theta0.shape:
            raise PreconditionError("w, varsigma and theta0 must have the same shape")
        if sum(b.size for b in self.bases) != self.w.size:
            raise PreconditionError("bases do not cover the parameter vector", {"params": self.w.size})

    @property
    def prior_scale(self) -> float:
        return float(np.exp(2.0 * self.varrho))

    @property
    def posterior_variances(self) -> np.ndarray:
        return np.exp(2.0 * self.varsigma)


class BoundReport(BaseModel):
    pac_bound: float = Field(ge=0.0, le=1.0)
    kl_divergence: float = Field(ge=0.0)
    snn_error: float = Field(ge=0.0, le=1.0, description="Monte-Carlo SNN 0-1 error on the training set")
    lambda_log: float = Field(description="log of the prior scale after rounding to the grid")
    lambda_grid_index: int = Field(ge=1)
    test_error: float = Field(ge=0.0, le=1.0, description="0-1 test error of the mean network")
    snn_test_error: float = Field(ge=0.0, le=1.0, description="Monte-Carlo SNN 0-1 error on the test set")
    mc_samples: int = Field(ge=1)


def init_state(model: MlpModel, theta0: np.ndarray, bases: Optional[Bases] = None) -> PacBayesState:
    """ς = log|w| and ϱ = −3, with the posterior mean at the model's parameters."""
    w = model.flatten()
    theta0 = np.asarray(theta0, dtype=np.float64)
    if theta0.shape != w.shape:
        raise PreconditionError("theta0 does not match the model", {"theta0": theta0.shape, "params": w.shape})
    return PacBayesState(
        w=w,
        varsigma=np.log(np.maximum(np.abs(w), MIN_INIT_STD)),
        varrho=INIT_VARRHO,
        theta0=theta0.copy(),
        bases=bases if bases is not None else identity_bases(model),
    )


def max_varrho(b_prec: float, c_lambda: float) -> float:
    """Largest ϱ whose λ still rounds to grid index j >= 1."""
    return 0.5 * (math.log(c_lambda) - 1.0 / b_prec)


def optimize(
    state: PacBayesState,
    model_template: MlpModel,
    data: Dataset,
    variant: Variant = Variant.ITER,
    tau: float = 0.001,
    T: int = 1000,
    eta: int = 10,
    seed: int = 0,
    batch: int = 128,
    delta: float = DEFAULT_DELTA,
    b_prec: float = DEFAULT_B_PREC,
    c_lambda: float = DEFAULT_C_LAMBDA,
    lr_decay_every: Optional[int] = None,
    lr_decay_factor: float = 0.1,
    threads: Optional[int] = None,
) -> PacBayesState:
    """
    Runs T iterations of the posterior update.

    Args:
        state: starting posterior and prior
        model_template: architecture used to evaluate sampled parameters
        data: training set S
        variant: eigenbasis policy; ``appr`` computes the bases once, ``iter``
            and ``iter_m`` recompute them every ``eta`` epochs at the current w
        tau: step size
        T: number of iterations (one minibatch each)
        eta: epochs between basis recomputations
        seed: seed of the minibatch and noise streams
        batch: minibatch size
        lr_decay_every: epochs between step-size decays (off when None)
        lr_decay_factor: multiplier applied at each decay

    Returns:
        A new state; the input state is not modified.
    """
    variant = Variant(variant)
    if tau < 0 or T < 0 or eta < 1 or batch < 1:
        raise PreconditionError("invalid optimization settings", {"tau": tau, "T": T, "eta": eta, "batch": batch})
    n = data.n_samples
    per_epoch = math.ceil(n / batch)
    rho_cap = max_varrho(b_prec, c_lambda)

    w = state.w.copy()
    varsigma = state.varsigma.copy()
    varrho = min(float(state.varrho), rho_cap)
    bases = state.bases
    trace = list(state.objective_trace)
    noise = make_rng(seed, 1)
    lr = tau
    order = np.empty(0, dtype=np.int64)

    if variant is not Variant.BASE:
        bases = compute_bases(model_template.with_params(w), data, variant, threads)
    else:
        bases = identity_bases(model_template)

    for t in range(T):
        epoch, step = divmod(t, per_epoch)
        if step == 0:
            order = make_rng(seed, 0, epoch).permutation(n)
            if epoch > 0 and lr_decay_every and epoch % lr_decay_every == 0:
                lr *= lr_decay_factor
                logger.info(f"epoch {epoch}: step size decayed to {lr:g}")
            if variant.recomputes and epoch > 0 and epoch % eta == 0:
                bases = compute_bases(model_template.with_params(w), data, variant, threads)
                logger.info(f"epoch {epoch}: recomputed {variant.value} eigenbases")

        rows = order[step * batch : (step + 1) * batch]
        xi = noise.standard_normal(w.size)
        std = np.exp(varsigma)
        w_prime = w + to_standard(xi * std, bases)
        loss, g = loss_and_grad(model_template.with_params(w_prime), data.inputs[rows], data.labels[rows])
        if not np.isfinite(loss):
            raise OptimizationError(f"sampled loss is not finite at iteration {t}", iteration=t)
        g = g.flatten()
        terms = objective_terms(w, varsigma, varrho, state.theta0, n, delta, b_prec, c_lambda)

        grad_w = terms.grad_w + g
        grad_s = terms.grad_varsigma + to_hessian(g, bases) * xi * std
        w = w - lr * grad_w
        varsigma = varsigma - lr * grad_s
        varrho = min(varrho - lr * terms.grad_varrho, rho_cap)
        trace.append(float(loss + terms.r))
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(varsigma)) and np.isfinite(varrho)):
            raise OptimizationError(f"posterior parameters diverged at iteration {t}", iteration=t)
        if step == per_epoch - 1:
            logger.debug(f"epoch {epoch}: objective {trace[-1]:.6f}, KL {terms.kl:.3f}, lambda {math.exp(2 * varrho):.3e}")

    return replace(state, w=w, varsigma=varsigma, varrho=varrho, bases=bases, objective_trace=trace)


def round_prior_scale(varrho: float, b_prec: float, c_lambda: float) -> tuple:
    """Nearest grid point λ_j = c_λ exp(−j/b); returns (j, log λ_j)."""
    j = int(round(b_prec * (math.log(c_lambda) - 2.0 * varrho)))
    if j < 1:
        raise DomainError("prior scale rounds outside the grid", {"j": j, "varrho": varrho})
    return j, math.log(c_lambda) - j / b_prec


def _snn_errors(
    state: PacBayesState,
    model_template: MlpModel,
    datasets: List[Dataset],
    samples: int,
    seed: int,
    threads: Optional[int],
) -> np.ndarray:
    """Mean 0-1 error of ``samples`` posterior draws on each dataset."""
    std = np.exp(state.varsigma)

    def part(start: int, stop: int) -> np.ndarray:
        errs = np.zeros(len(datasets))
        for i in range(start, stop):
            xi = make_rng(seed, 2, i).standard_normal(state.w.size)
            model = model_template.with_params(state.w + to_standard(xi * std, state.bases))
            errs += [classification_error(model, d.inputs, d.labels) for d in datasets]
        return errs

    return chunked_sum(part, samples, threads, chunk_size=8) / samples


def final_bound(
    state: PacBayesState,
    model_template: MlpModel,
    data_train: Dataset,
    data_test: Dataset,
    mc_iters: int = DEFAULT_MC_ITERS,
    mc_freq: int = DEFAULT_MC_FREQ,
    delta: float = DEFAULT_DELTA,
    delta_prime: float = DEFAULT_DELTA_PRIME,
    b_prec: float = DEFAULT_B_PREC,
    c_lambda: float = DEFAULT_C_LAMBDA,
    seed: int = 0,
    threads: Optional[int] = None,
) -> BoundReport:
    """
    Certified bound on the SNN error.

    One posterior network is drawn every ``mc_freq`` of the ``mc_iters``
    iterations and evaluated on the whole training set; with M draws,
    ê_Q = kl_inverse(ê_MC, log(2/δ′)/M) and the bound is
    kl_inverse(ê_Q, B_RE evaluated at the rounded prior scale).
    """
    if mc_iters < 1 or mc_freq < 1:
        raise PreconditionError("mc_iters and mc_freq must be positive", {"mc_iters": mc_iters, "mc_freq": mc_freq})
    j, log_lam = round_prior_scale(state.varrho, b_prec, c_lambda)
    varrho_j = 0.5 * log_lam
    kl = kl_q_p(state.w, state.varsigma, varrho_j, state.theta0)
    samples = max(1, mc_iters // mc_freq)

    train_err, test_snn = _snn_errors(state, model_template, [data_train, data_test], samples, seed, threads)
    e_q = kl_inverse(float(train_err), math.log(2.0 / delta_prime) / samples)
    budget = b_re_value(kl, varrho_j, data_train.n_samples, delta, b_prec, c_lambda)
    bound = kl_inverse(e_q, max(budget, 0.0))

    mean_model = model_template.with_params(state.w)
    report = BoundReport(
        pac_bound=bound,
        kl_divergence=max(kl, 0.0),
        snn_error=float(train_err),
        lambda_log=log_lam,
        lambda_grid_index=j,
        test_error=classification_error(mean_model, data_test.inputs, data_test.labels),
        snn_test_error=float(test_snn),
        mc_samples=samples,
    )
    logger.info(f"PAC-Bayes bound {bound:.4f} (KL {kl:.2f}, SNN train error {train_err:.4f}, {samples} samples)")
    return report


def variance_rank_correlation(state: PacBayesState) -> float:
    """Spearman correlation between approximate Hessian eigenvalues and posterior variances."""
    values = [b.kron_values() for b in state.bases]
    if any(v is None for v in values):
        raise PreconditionError("bases carry no eigenvalues (standard basis)")
    rho, _ = spearmanr(np.concatenate(values), state.posterior_variances)
    return float(rho)
