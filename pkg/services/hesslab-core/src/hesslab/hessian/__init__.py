"""Layer-wise Hessians, their Kronecker factors and approximations."""

from .closed_form import closed_form_output_hessian, mean_softmax_hessian, s_matrix, uniform_softmax_hessian
from .factors import LayerFactors, extend_inputs, input_autocorrelation, input_mean, layer_factors
from .full import full_hessian_approx, full_output_hessian
from .operators import full_gterm_operator, layerwise_dense, layerwise_hvp_operator
from .spectrum import KronSpectrum, kron_approx_spectrum, true_layer_spectrum

__all__ = [
    "LayerFactors",
    "layer_factors",
    "input_mean",
    "input_autocorrelation",
    "extend_inputs",
    "layerwise_hvp_operator",
    "layerwise_dense",
    "full_gterm_operator",
    "KronSpectrum",
    "kron_approx_spectrum",
    "true_layer_spectrum",
    "full_hessian_approx",
    "full_output_hessian",
    "s_matrix",
    "closed_form_output_hessian",
    "uniform_softmax_hessian",
    "mean_softmax_hessian",
]
