"""Seasonal-trend decomposition and the seasonality-strength score.

Two decompositions live here: the learnable multi-kernel moving-average split
used inside the forecaster (trend = softmax-mixed bank of centered averages,
seasonal = residual), and a classical fixed-period decomposition
(trend / seasonal / remainder) used to score how seasonal a series is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidSizeError, ShapeError
from .numerics import softmax_rows


@dataclass
class DecompResult:
    trend: np.ndarray
    seasonal: np.ndarray


@dataclass
class StlResult:
    trend: np.ndarray
    seasonal: np.ndarray
    remainder: np.ndarray


@dataclass
class MixerParams:
    """Linear map from a time step's channel vector to one logit per kernel."""

    weight: np.ndarray  # (n_kernels, channels)
    bias: np.ndarray  # (n_kernels,)

    @classmethod
    def zeros(cls, n_kernels: int, channels: int) -> "MixerParams":
        # Zero logits give uniform mixing, a neutral starting point.
        return cls(np.zeros((n_kernels, channels)), np.zeros(n_kernels))


def _check_series(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"series must be 2-D (time x channels), got shape {x.shape}")
    return x


def _windowed_mean(padded: np.ndarray, weights: np.ndarray) -> np.ndarray:
    windows = np.lib.stride_tricks.sliding_window_view(padded, len(weights), axis=0)
    return windows @ weights


def moving_average(x, kernel: int) -> np.ndarray:
    """Centered moving average with replicate padding at both ends."""
    x = _check_series(x)
    length = x.shape[0]
    if kernel % 2 == 0 or not 1 <= kernel <= length:
        raise InvalidSizeError(f"kernel must be odd and in [1, {length}], got {kernel}")
    if kernel == 1:
        return x.copy()
    half = kernel // 2
    padded = np.pad(x, ((half, half), (0, 0)), mode="edge")
    return _windowed_mean(padded, np.full(kernel, 1.0 / kernel))


def multi_kernel_decomp(x, kernels, mixer: MixerParams) -> DecompResult:
    """Trend from softmax-weighted moving averages; seasonal is the residual.

    The mixer maps each time step's channel vector to one logit per kernel;
    softmax over those logits weights the per-kernel averages at that step.
    """
    x = _check_series(x)
    kernels = list(kernels)
    if not kernels:
        raise ConfigError("multi_kernel_decomp needs at least one kernel")
    if mixer.weight.shape != (len(kernels), x.shape[1]):
        raise ShapeError(
            f"mixer weight shape {mixer.weight.shape} does not match "
            f"({len(kernels)}, {x.shape[1]})"
        )
    averages = [moving_average(x, k) for k in kernels]
    logits = x @ mixer.weight.T + mixer.bias
    weights = softmax_rows(logits)  # (L, n_kernels)
    trend = np.zeros_like(x)
    for j, avg in enumerate(averages):
        trend += weights[:, j : j + 1] * avg
    seasonal = x - trend
    return DecompResult(trend=trend, seasonal=seasonal)


def _stl_trend(x: np.ndarray, period: int) -> np.ndarray:
    if period % 2 == 1:
        return moving_average(x, period)
    # Even period: 2 x MA convention, i.e. a (period+1)-wide window with
    # half weights at the ends. This annihilates a period-p cycle exactly.
    weights = np.full(period + 1, 1.0 / period)
    weights[0] = weights[-1] = 0.5 / period
    half = period // 2
    padded = np.pad(x, ((half, half), (0, 0)), mode="edge")
    return _windowed_mean(padded, weights)


def stl_decompose(x, period: int) -> StlResult:
    """Classical fixed-period decomposition: MA trend + per-phase seasonal means."""
    x = _check_series(x)
    length = x.shape[0]
    if period < 2 or 2 * period > length:
        raise InvalidSizeError(f"period {period} invalid for series of length {length}")
    trend = _stl_trend(x, period)
    detrended = x - trend
    pattern = np.empty((period, x.shape[1]))
    for phase in range(period):
        pattern[phase] = detrended[phase::period].mean(axis=0)
    pattern -= pattern.mean(axis=0, keepdims=True)
    reps = -(-length // period)  # ceil
    seasonal = np.tile(pattern, (reps, 1))[:length]
    remainder = x - trend - seasonal
    return StlResult(trend=trend, seasonal=seasonal, remainder=remainder)


def seasonality_strength(x, period: int) -> float:
    """max(0, 1 - Var(remainder) / (Var(seasonal) + Var(remainder))), in [0, 1].

    Multi-channel input returns the mean strength across channels.
    """
    result = stl_decompose(x, period)
    strengths = []
    for d in range(result.seasonal.shape[1]):
        var_s = float(np.var(result.seasonal[:, d]))
        var_r = float(np.var(result.remainder[:, d]))
        denom = var_s + var_r
        if denom == 0.0:
            strengths.append(0.0)
        else:
            strengths.append(max(0.0, 1.0 - var_r / denom))
    return float(np.mean(strengths))
