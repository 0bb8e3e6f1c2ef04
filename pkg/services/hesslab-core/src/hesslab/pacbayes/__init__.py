"""PAC-Bayes bound optimization in the layer-wise Hessian eigenbasis."""

from .bases import Bases, LayerBasis, Variant, compute_bases, identity_bases, to_hessian, to_standard
from .objective import (
    DEFAULT_B_PREC,
    DEFAULT_C_LAMBDA,
    DEFAULT_DELTA,
    ObjectiveTerms,
    b_re,
    b_re_value,
    kl_bernoulli,
    kl_inverse,
    kl_q_p,
    objective_terms,
)
from .optimize import (
    BoundReport,
    PacBayesState,
    final_bound,
    init_state,
    optimize,
    round_prior_scale,
    variance_rank_correlation,
)

__all__ = [
    "Bases",
    "LayerBasis",
    "Variant",
    "compute_bases",
    "identity_bases",
    "to_hessian",
    "to_standard",
    "DEFAULT_B_PREC",
    "DEFAULT_C_LAMBDA",
    "DEFAULT_DELTA",
    "ObjectiveTerms",
    "b_re",
    "b_re_value",
    "kl_bernoulli",
    "kl_inverse",
    "kl_q_p",
    "objective_terms",
    "BoundReport",
    "PacBayesState",
    "final_bound",
    "init_state",
    "optimize",
    "round_prior_scale",
    "variance_rank_correlation",
]
