"""Time/Fourier/wavelet attention laboratory and the TDformer forecaster."""

__version__ = "0.1.0"

from .attention import Activation, AttentionDomain
from .model import ModelConfig, TDformer
from .training import TrainConfig

__all__ = [
    "Activation",
    "AttentionDomain",
    "ModelConfig",
    "TDformer",
    "TrainConfig",
    "__version__",
]
