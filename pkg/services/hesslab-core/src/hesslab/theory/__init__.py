from .theorem import (
    TheoremReport,
    coupled_output_hessian,
    decoupled_output_hessian,
    grid_frame,
    multilayer_overlap,
    run_theorem_check,
    target_subspace,
    theorem_grid,
    theorem_problem,
)

__all__ = [
    "TheoremReport",
    "coupled_output_hessian",
    "decoupled_output_hessian",
    "grid_frame",
    "multilayer_overlap",
    "run_theorem_check",
    "target_subspace",
    "theorem_grid",
    "theorem_problem",
]
