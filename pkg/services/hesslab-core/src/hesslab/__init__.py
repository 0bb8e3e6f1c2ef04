# =============================================================================
# hesslab - Layer-wise Hessian Structure Toolkit
# =============================================================================
"""
hesslab - Hessian structure of fully connected networks

Kronecker-factored approximation of layer-wise Hessians, eigenspace overlap
and correspondence metrics, an empirical check of the output-Hessian
subspace theorem, and PAC-Bayes bounds optimized in the Hessian eigenbasis.
"""

__version__ = "0.1.0"

from .core.config import HesslabSettings, settings
from .core.errors import HesslabError
from .data.datasets import Dataset
from .hessian.factors import LayerFactors, layer_factors
from .hessian.spectrum import kron_approx_spectrum, true_layer_spectrum
from .network.model import MlpModel

__all__ = [
    "HesslabSettings",
    "settings",
    "HesslabError",
    "Dataset",
    "MlpModel",
    "LayerFactors",
    "layer_factors",
    "kron_approx_spectrum",
    "true_layer_spectrum",
]
