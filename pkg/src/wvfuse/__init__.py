"""Optimal linear fusion of redundant sensor arrays by scale-wise variance minimization."""

__version__ = "0.1.0"

from .errors import DegenerateCovarianceError, InputError, WvfuseError
from .wavelet import (
    ScaleCovariances,
    SignalArray,
    WaveletPyramid,
    level_covariances,
    modwt,
    wavelet_variance,
    wccv_hat,
    wccv_matrices,
)
from .svo import (
    CoefficientVector,
    VirtualSignal,
    WeightVector,
    aggregate,
    fuse,
    make_weights,
    optimal_coefficients,
    svo_fit,
    virtual_wv,
)
from .inference import (
    BootstrapConfig,
    ConfidenceIntervals,
    InferenceResult,
    default_block_size,
    estimate_V,
    gradient_G,
    svo_inference,
)
from .baselines import equal_weights, estimate_Q_wn_rw, rdvg_coefficients
from .models import WnAr1Model, WnRwModel, case1, case2, gmwm_fit_wn_rw, simulate

__all__ = [
    "BootstrapConfig", "CoefficientVector", "ConfidenceIntervals", "DegenerateCovarianceError",
    "InferenceResult", "InputError", "ScaleCovariances", "SignalArray", "VirtualSignal",
    "WaveletPyramid", "WeightVector", "WnAr1Model", "WnRwModel", "WvfuseError", "aggregate",
    "case1", "case2", "default_block_size", "equal_weights", "estimate_Q_wn_rw", "estimate_V",
    "fuse", "gmwm_fit_wn_rw", "gradient_G", "level_covariances", "make_weights", "modwt",
    "optimal_coefficients", "rdvg_coefficients", "simulate", "svo_fit", "svo_inference",
    "virtual_wv", "wavelet_variance", "wccv_hat", "wccv_matrices",
]
