"""Adaptive-DCT rate-perception preprocessing and codec RD evaluation."""

__version__ = "0.1.0"

from .dct_core import (
    DctConfig,
    Normalization,
    Reduction,
    ThresholdMode,
    adaptive_dct_filter,
    adaptive_dct_loss,
    adaptive_dct_loss_grad,
)
from .degrade import DegradationRanges, DegradationRecipe, apply_recipe, sample_recipe
from .estimators import (
    AdaptiveDCTFilter,
    DegradationTransformer,
    RatePerceptionPreprocessor,
)
from .media_io import Frame, PixelFormat, VideoSequence, read_png, read_y4m, write_png, write_y4m
from .metrics import LossWeights, ms_ssim, psnr, ssim, total_loss
from .rd_harness import (
    BlendConfig,
    EncoderProfile,
    Preprocessor,
    RdCurve,
    alpha_blend,
    bd_rate,
    sweep,
)

__all__ = [
    "AdaptiveDCTFilter",
    "BlendConfig",
    "DctConfig",
    "DegradationRanges",
    "DegradationRecipe",
    "DegradationTransformer",
    "EncoderProfile",
    "Frame",
    "LossWeights",
    "Normalization",
    "PixelFormat",
    "Preprocessor",
    "RatePerceptionPreprocessor",
    "RdCurve",
    "Reduction",
    "ThresholdMode",
    "VideoSequence",
    "adaptive_dct_filter",
    "adaptive_dct_loss",
    "adaptive_dct_loss_grad",
    "alpha_blend",
    "apply_recipe",
    "bd_rate",
    "ms_ssim",
    "psnr",
    "read_png",
    "read_y4m",
    "sample_recipe",
    "ssim",
    "sweep",
    "total_loss",
    "write_png",
    "write_y4m",
]
