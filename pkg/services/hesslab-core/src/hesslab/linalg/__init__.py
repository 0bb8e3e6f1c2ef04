from .dense import (
    EigPairs,
    canonical_angles,
    fix_signs,
    gram_schmidt,
    kron,
    max_orthonormality_error,
    orthonormalize,
    subspace_projector,
    svd_values,
    sym_eig_dense,
)
from .lanczos import LinearOperator, lanczos_topk, ritz_residuals

__all__ = [
    "EigPairs",
    "LinearOperator",
    "canonical_angles",
    "fix_signs",
    "gram_schmidt",
    "kron",
    "lanczos_topk",
    "max_orthonormality_error",
    "orthonormalize",
    "ritz_residuals",
    "subspace_projector",
    "svd_values",
    "sym_eig_dense",
]
