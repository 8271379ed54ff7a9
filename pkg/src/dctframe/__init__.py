"""Sparse block-DCT frame codec with autoregressive sequence modelling."""

from .blockdct import CodecConfig, QuantizedPlanes
from .colorspace import YuvPlanes, rgb_to_yuv, yuv_to_rgb
from .presets import PRESETS, Preset, get_preset
from .sparse import (
    DctImage,
    SparseElement,
    SparseSequence,
    from_sparse,
    residual_encode,
    scatter_partial,
    to_sparse,
)
from .sequence import (
    CountPredictor,
    Predictor,
    PredictorContext,
    TokenSpace,
    UniformPredictor,
    bits_per_dimension,
    nll,
    sample_sequence,
    train_baseline,
)

__version__ = "0.1.0"

__all__ = [
    "CodecConfig",
    "QuantizedPlanes",
    "YuvPlanes",
    "rgb_to_yuv",
    "yuv_to_rgb",
    "PRESETS",
    "Preset",
    "get_preset",
    "DctImage",
    "SparseElement",
    "SparseSequence",
    "from_sparse",
    "residual_encode",
    "scatter_partial",
    "to_sparse",
    "CountPredictor",
    "Predictor",
    "PredictorContext",
    "TokenSpace",
    "UniformPredictor",
    "bits_per_dimension",
    "nll",
    "sample_sequence",
    "train_baseline",
]
