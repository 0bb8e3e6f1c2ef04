"""Structural metrics on layer-Hessian eigenspaces."""

from .autocorr import AutocorrStats, autocorr_stats
from .correspondence import CorrespondenceMatrix, correspondence_input, correspondence_output
from .cross_model import converged_prefix, cross_model_overlap
from .subspace import (
    OverlapCurve,
    matricize,
    overlap_curve,
    random_overlap_baseline,
    subspace_overlap,
    top_singular_ratio,
    vectorize,
)

__all__ = [
    "AutocorrStats",
    "autocorr_stats",
    "CorrespondenceMatrix",
    "correspondence_input",
    "correspondence_output",
    "cross_model_overlap",
    "converged_prefix",
    "OverlapCurve",
    "matricize",
    "overlap_curve",
    "random_overlap_baseline",
    "subspace_overlap",
    "top_singular_ratio",
    "vectorize",
]
