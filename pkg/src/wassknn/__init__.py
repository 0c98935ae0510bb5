"""Wasserstein-space k-NN classification and the geometry around it."""

from ._jit import JIT_ENABLED
from .measures import DiscreteMeasure, RationalMeasure, StaircaseQuantile, ValidationError, dirac, gqf_eval
from .transport import GaussianMeasure, TransportError, w2_gaussian, wp, wp_discrete, wp_one_dim
from .knn import GenerativeModel, LabeledDataset, bayes_risk, classify, estimate_risk, k_schedule, neighbors, vote
from .wavelet import WaveletDensity

__version__ = "0.1.0"

__all__ = [
    "JIT_ENABLED",
    "DiscreteMeasure",
    "GaussianMeasure",
    "GenerativeModel",
    "LabeledDataset",
    "RationalMeasure",
    "StaircaseQuantile",
    "TransportError",
    "ValidationError",
    "WaveletDensity",
    "bayes_risk",
    "classify",
    "dirac",
    "estimate_risk",
    "gqf_eval",
    "k_schedule",
    "neighbors",
    "vote",
    "w2_gaussian",
    "wp",
    "wp_discrete",
    "wp_one_dim",
]
