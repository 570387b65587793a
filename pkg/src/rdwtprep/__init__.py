"""Rational-dilation undecimated wavelet denoising for epoched multichannel signals."""

from .core import (
    ConfusionMatrix,
    EpochedDataset,
    FilterPair,
    InvalidDatasetError,
    RationalFactor,
    RdwtConfig,
    RdwtError,
    Signal,
    SubbandPyramid,
    default_dilations,
    validate_dataset,
)
from .resample import build_level_filters, resample_kernel
from .transform import decompose, denoise, denoise_dataset, reconstruct, threshold_details

__version__ = "0.1.0"
