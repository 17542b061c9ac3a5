"""Dense transform and row-normalization kernels.

Everything here is a pure function of its arguments and safe to call
concurrently. Matrices are 2-D numpy arrays (rows = time/coefficient index,
columns = channels), float64 or complex128 throughout.

The DFT is unitary (1/sqrt(L) on both directions), so the transform matrix W
satisfies W^{-1} = W^H and W = W^T. The wavelet transform is the full L x L
orthogonal Haar analysis matrix (approximation rows stacked over detail rows),
recursing on the approximation block for deeper levels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidSizeError, ShapeError

IMAG_RESIDUAL_WARN = 1e-6


def _as_matrix(x, name: str) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D (rows x channels), got shape {a.shape}")
    return a


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def fourier_matrix(length: int) -> np.ndarray:
    """Unitary DFT matrix W with W[j,k] = omega^{jk}/sqrt(L), omega = e^{-2*pi*i/L}.

    The exponent is reduced mod L before evaluating, which keeps every entry
    accurate to machine precision even for large j*k.
    """
    if length < 1:
        raise InvalidSizeError(f"fourier_matrix needs length >= 1, got {length}")
    idx = np.arange(length, dtype=np.int64)
    exponent = (idx[:, None] * idx[None, :]) % length
    return np.exp(-2j * np.pi * exponent / length) / np.sqrt(length)


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_radix2(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time radix-2 FFT along axis 0, unnormalized."""
    length = x.shape[0]
    y = x[_bit_reverse_indices(length)].astype(np.complex128)
    m = 2
    while m <= length:
        half = m // 2
        y = y.reshape(length // m, m, -1)
        twiddle = np.exp(-2j * np.pi * np.arange(half) / m)[None, :, None]
        upper, lower = y[:, :half], y[:, half:] * twiddle
        y = np.concatenate([upper + lower, upper - lower], axis=1)
        m *= 2
    return y.reshape(length, -1)


def dft(x) -> np.ndarray:
    """Column-wise unitary DFT: radix-2 for power-of-two lengths, W@x otherwise."""
    x = _as_matrix(x, "x")
    length = x.shape[0]
    if length == 0:
        raise InvalidSizeError("dft needs at least one row")
    if is_power_of_two(length):
        return _fft_radix2(x) / np.sqrt(length)
    return fourier_matrix(length) @ x


def idft(spectrum) -> np.ndarray:
    """Inverse unitary DFT; returns the real part.

    A residual imaginary magnitude above 1e-6 indicates the input was not the
    spectrum of a real signal; it is reported as a warning, not an error.
    """
    spectrum = _as_matrix(spectrum, "spectrum")
    length = spectrum.shape[0]
    if length == 0:
        raise InvalidSizeError("idft needs at least one row")
    if is_power_of_two(length):
        # W^H X = conj(W conj(X)) because W is symmetric.
        y = np.conj(_fft_radix2(np.conj(spectrum))) / np.sqrt(length)
    else:
        y = fourier_matrix(length).conj().T @ spectrum
    residual = float(np.max(np.abs(y.imag))) if y.size else 0.0
    if residual > IMAG_RESIDUAL_WARN:
        warnings.warn(
            f"idft discarded imaginary residual of magnitude {residual:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return np.ascontiguousarray(y.real)


@dataclass(frozen=True)
class WaveletBasis:
    """Orthogonal Haar analysis matrix for a power-of-two length."""

    length: int
    levels: int
    analysis_matrix: np.ndarray

    def analyze(self, x: np.ndarray) -> np.ndarray:
        return self.analysis_matrix @ x

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        return self.analysis_matrix.T @ coeffs


def wavelet_basis(length: int, levels: int) -> WaveletBasis:
    """Build the L x L orthogonal Haar analysis matrix.

    Level 1 maps x to (pairwise averages, pairwise differences) scaled by
    1/sqrt(2); each further level repeats that on the approximation block.
    """
    if not is_power_of_two(length) or length < 2:
        raise InvalidSizeError(f"wavelet length must be a power of two >= 2, got {length}")
    max_levels = int(np.log2(length))
    if not 1 <= levels <= max_levels:
        raise InvalidSizeError(
            f"levels must be in [1, {max_levels}] for length {length}, got {levels}"
        )
    matrix = np.eye(length)
    block = length
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for _ in range(levels):
        half = block // 2
        step = np.eye(length)
        step[:block, :block] = 0.0
        for i in range(half):
            step[i, 2 * i] = inv_sqrt2
            step[i, 2 * i + 1] = inv_sqrt2
            step[half + i, 2 * i] = inv_sqrt2
            step[half + i, 2 * i + 1] = -inv_sqrt2
        matrix = step @ matrix
        block = half
    return WaveletBasis(length=length, levels=levels, analysis_matrix=matrix)


def dwt(x, basis: WaveletBasis) -> np.ndarray:
    """Forward wavelet transform: analysis_matrix @ x."""
    x = _as_matrix(x, "x")
    if x.shape[0] != basis.length:
        raise ShapeError(f"signal has {x.shape[0]} rows, basis expects {basis.length}")
    return basis.analyze(x)


def idwt(coeffs, basis: WaveletBasis) -> np.ndarray:
    """Inverse wavelet transform: analysis_matrix^T @ coeffs."""
    coeffs = _as_matrix(coeffs, "coeffs")
    if coeffs.shape[0] != basis.length:
        raise ShapeError(f"coefficients have {coeffs.shape[0]} rows, basis expects {basis.length}")
    return basis.reconstruct(coeffs)


def softmax_rows(scores) -> np.ndarray:
    """Row-wise softmax with max-subtraction for overflow safety."""
    scores = np.asarray(scores, dtype=np.float64)
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def poly_norm_rows(scores, degree: int) -> np.ndarray:
    """Row-wise polynomial normalization s_i^d / sum_j s_j^d for positive scores.

    Rows are rescaled by their maximum first; the result is invariant to that
    and it prevents overflow at high degrees.
    """
    if degree < 1:
        raise DomainError(f"polynomial degree must be >= 1, got {degree}")
    scores = np.asarray(scores, dtype=np.float64)
    if np.any(scores <= 0.0):
        raise DomainError("poly_norm_rows requires strictly positive entries")
    scaled = scores / scores.max(axis=-1, keepdims=True)
    powered = scaled**degree
    return powered / powered.sum(axis=-1, keepdims=True)
