"""Behavioral simulator for complementary-FeFET analog CAM arrays."""

__version__ = "0.1.0"

from .core import (
    AcamArray,
    MatchWindow,
    NoiseSpec,
    cell_current,
    make_window,
    match_matrix,
    perturb_windows,
    quantize,
)
from .device import DeviceConfig, FefetParams, Polarity, PulseProgram, channel_current, program_threshold
from .errors import DegenerateInputError, OutOfRangeError, ParseError, SingularSystemError
from .kernel import KernelKind, KernelModel, KernelSpec, fit, predict_acam, predict_exact
from .search import SimilarityResult, analog_hamming, cosine_similarity, digital_hamming

__all__ = [
    "AcamArray", "MatchWindow", "NoiseSpec", "cell_current", "make_window", "match_matrix",
    "perturb_windows", "quantize", "DeviceConfig", "FefetParams", "Polarity", "PulseProgram",
    "channel_current", "program_threshold", "DegenerateInputError", "OutOfRangeError",
    "ParseError", "SingularSystemError", "KernelKind", "KernelModel", "KernelSpec", "fit",
    "predict_acam", "predict_exact", "SimilarityResult", "analog_hamming",
    "cosine_similarity", "digital_hamming",
]
