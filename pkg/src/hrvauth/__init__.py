"""Continuous authentication from wrist-worn-device RR-interval streams."""

from .errors import HRVAuthError
from .ingest import DeviceKind, RRSample, RRSeries, parse_file
from .preprocess import PreprocessConfig, detect_artifacts, preprocess_series
from .features import FEATURE_NAMES, FeatureMatrix, HRVFeatures, SpectralConfig, extract

__version__ = "0.1.0"

__all__ = [
    "HRVAuthError",
    "DeviceKind",
    "RRSample",
    "RRSeries",
    "parse_file",
    "PreprocessConfig",
    "detect_artifacts",
    "preprocess_series",
    "FEATURE_NAMES",
    "FeatureMatrix",
    "HRVFeatures",
    "SpectralConfig",
    "extract",
]
