"""Scattering transform features and PCA affine-model classification.

The package is organised in layers:

``filterbank``
    Gabor/Morlet wavelets and the Gaussian lowpass in the Fourier domain.
``engine``
    FFT convolution, modulus, subsampling and padding primitives.
``scattering``
    The scattering cascade, its metric and feature containers.
``models`` / ``classifier``
    Per-class affine PCA spaces and penalised model selection.
``datasets`` / ``pipeline`` / ``cli``
    Data loading, end-to-end protocols and the ``scatpca`` command.
"""

from .classifier import (ClassifierConfig, CVResult, EvaluationResult, Prediction, classify,
                         cross_validate, evaluate, inner_k_selection, predict)
from .datasets import (LabeledDataset, load_idx, load_mnist, load_texture_dir, load_usps,
                       stratified_split, subsample_train)
from .exceptions import (ConfigurationError, DataError, DimensionError, FormatError,
                         IncompatibleError, ScatPCAError)
from .filterbank import (FilterBank, GaborParams, build_filterbank, littlewood_paley_profile,
                         load_filterbank, save_filterbank)
from .models import (AffineModel, InOutCurves, fit_affine_model, fit_class_models,
                     in_out_curves, load_models, projection_error, projection_errors,
                     save_models)
from .pipeline import ProtocolResult, compute_features, run_protocol
from .scattering import (Scattering, ScatteringConfig, ScatteringVector, enumerate_paths,
                         load_features, num_paths, propagate, save_features, scatter,
                         scatter_batch, scattering_distance, scattering_norm)

__version__ = "0.1.0"

__all__ = [
    "AffineModel", "ClassifierConfig", "ConfigurationError", "CVResult", "DataError",
    "DimensionError", "EvaluationResult", "FilterBank", "FormatError", "GaborParams",
    "IncompatibleError", "InOutCurves", "LabeledDataset", "Prediction", "ProtocolResult",
    "ScatPCAError", "Scattering", "ScatteringConfig", "ScatteringVector",
    "build_filterbank", "classify", "compute_features", "cross_validate", "enumerate_paths",
    "evaluate", "fit_affine_model", "fit_class_models", "in_out_curves", "inner_k_selection",
    "littlewood_paley_profile", "load_features", "load_filterbank", "load_idx", "load_mnist",
    "load_models", "load_texture_dir", "load_usps", "num_paths", "predict", "projection_error",
    "projection_errors", "propagate", "run_protocol", "save_features", "save_filterbank",
    "save_models", "scatter", "scatter_batch", "scattering_distance", "scattering_norm",
    "stratified_split", "subsample_train",
]
