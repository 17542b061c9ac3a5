"""Synthetic series generators, CSV ingestion, windowing and splitting.

Series are (T x D) float64 arrays. Generators are deterministic given their
seed. CSV files carry a header row whose first column is a timestamp string;
all remaining columns are numeric channels.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, InvalidSizeError


@dataclass
class SeriesWindow:
    """One (context, horizon) training pair cut from a series."""

    context: np.ndarray  # (L_c, D)
    horizon_target: np.ndarray  # (H, D)
    origin: int

    @property
    def channels(self) -> int:
        return self.context.shape[1]


@dataclass
class Dataset:
    name: str
    channel_names: list
    series: np.ndarray  # (T, D)
    timestamps: list = field(default_factory=list)
    sampling_period: str = ""

    @property
    def length(self) -> int:
        return self.series.shape[0]

    @property
    def channels(self) -> int:
        return self.series.shape[1]


def gen_sin(length: int, period: float = 24, amplitude: float = 1.0, phase: float = 0.0) -> np.ndarray:
    """x[t] = amplitude * sin(2*pi*t/period + phase), shape (length, 1)."""
    if period <= 1:
        raise ConfigError(f"period must exceed 1, got {period}")
    t = np.arange(length, dtype=np.float64)
    return (amplitude * np.sin(2.0 * np.pi * t / period + phase))[:, None]


def gen_varying_seasonal(
    length: int,
    base_period: int = 24,
    block_length: int = 48,
    amplitude: float = 1.0,
    phase: float = 0.0,
) -> np.ndarray:
    """Alternating blocks of period P and P/2 sinusoid, phase-continuous at joins."""
    if base_period % 2 != 0:
        raise InvalidSizeError(f"base_period must be even so P/2 is integral, got {base_period}")
    if block_length < base_period:
        raise ConfigError("block_length must be at least base_period")
    steps = np.empty(length)
    for t in range(length):
        block = t // block_length
        period = base_period if block % 2 == 0 else base_period // 2
        steps[t] = 2.0 * np.pi / period
    phases = phase + np.concatenate([[0.0], np.cumsum(steps[:-1])])
    return (amplitude * np.sin(phases))[:, None]


def gen_linear_trend(
    length: int,
    slope: float = 1.0,
    intercept: float = 0.0,
    noise_std: float = 0.0,
    seed: int = 0,
) -> np.ndarray:
    """x[t] = slope * t + intercept, plus optional seeded Gaussian noise."""
    t = np.arange(length, dtype=np.float64)
    x = slope * t + intercept
    if noise_std > 0:
        x = x + np.random.default_rng(seed).normal(0.0, noise_std, size=length)
    return x[:, None]


def inject_spikes(
    series: np.ndarray,
    probability: float,
    magnitude: float,
    seed: int,
    train_end: int,
) -> np.ndarray:
    """Add +magnitude spikes at seeded random steps before train_end only."""
    if not 0.0 < probability < 1.0:
        raise ConfigError(f"spike probability must be in (0, 1), got {probability}")
    series = np.asarray(series, dtype=np.float64)
    out = series.copy()
    rng = np.random.default_rng(seed)
    hits = rng.random(min(train_end, series.shape[0])) < probability
    out[: len(hits)][hits] += magnitude
    return out


def load_csv(path: str) -> Dataset:
    """Parse a timestamp + channels CSV; any bad cell fails with its coordinates."""
    if not os.path.exists(path):
        raise DataError(f"dataset file not found: {path}")
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"could not read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header = rows[0]
    if len(header) < 2:
        raise DataError(f"{path} needs a timestamp column plus at least one channel")
    channel_names = header[1:]
    if len(rows) == 1:
        raise DataError(f"{path} has a header but no data rows")
    timestamps = []
    values = np.empty((len(rows) - 1, len(channel_names)), dtype=np.float64)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        timestamps.append(row[0])
        for j, cell in enumerate(row[1:]):
            try:
                values[i - 2, j] = float(cell)
            except ValueError as exc:
                raise DataError(
                    f"{path}: non-numeric cell at row {i}, column {channel_names[j]!r}: {cell!r}"
                ) from exc
    return Dataset(
        name=os.path.splitext(os.path.basename(path))[0],
        channel_names=channel_names,
        series=values,
        timestamps=timestamps,
    )


def save_csv(dataset: Dataset, path: str) -> None:
    """Write a dataset back out; float repr keeps values bit-exact on reload."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date"] + list(dataset.channel_names))
        for i in range(dataset.length):
            stamp = dataset.timestamps[i] if dataset.timestamps else str(i)
            writer.writerow([stamp] + [repr(float(v)) for v in dataset.series[i]])


def standardize(series: np.ndarray) -> np.ndarray:
    """Dataset-level z-score per channel (optional; RevIN is the default route)."""
    series = np.asarray(series, dtype=np.float64)
    mean = series.mean(axis=0, keepdims=True)
    std = series.std(axis=0, keepdims=True)
    std[std == 0.0] = 1.0
    return (series - mean) / std


def make_windows(series: np.ndarray, context_len: int, horizon: int, stride: int = 1) -> list:
    """All (context, target) pairs ordered by origin; empty if the series is short."""
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    series = np.asarray(series, dtype=np.float64)
    total = series.shape[0]
    windows = []
    for origin in range(0, total - context_len - horizon + 1, stride):
        windows.append(
            SeriesWindow(
                context=series[origin : origin + context_len],
                horizon_target=series[origin + context_len : origin + context_len + horizon],
                origin=origin,
            )
        )
    return windows


def split_711(windows) -> tuple[list, list, list]:
    """Chronological 7:2:1 split on window origin order, floor at the boundaries."""
    n = len(windows)
    first = int(np.floor(0.7 * n))
    second = int(np.floor(0.9 * n))
    return list(windows[:first]), list(windows[first:second]), list(windows[second:])
