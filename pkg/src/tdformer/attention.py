"""Attention kernels in the time, Fourier and wavelet domains.

All three share the same score/combine pipeline; they differ only in the
basis the inputs are expressed in. With the identity activation the three are
algebraically identical (the basis change cancels); with softmax they are not,
which is the whole point of comparing them.

Complex scores (Fourier domain) are turned into real attention weights by
applying the activation to their entrywise modulus; the identity activation
passes complex scores through untouched so the equivalence stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import dft, dwt, idft, idwt, poly_norm_rows, softmax_rows, wavelet_basis

IDENTITY = "identity"
SOFTMAX = "softmax"
POLYNOMIAL = "polynomial"

TIME = "time"
FOURIER = "fourier"
WAVELET = "wavelet"


@dataclass(frozen=True)
class Activation:
    """Score activation: identity, softmax, or polynomial of a given degree."""

    kind: str
    degree: int = 0

    def __post_init__(self):
        if self.kind not in (IDENTITY, SOFTMAX, POLYNOMIAL):
            raise ConfigError(f"unknown activation kind {self.kind!r}")
        if self.kind == POLYNOMIAL and self.degree < 1:
            raise ConfigError("polynomial activation needs degree >= 1")

    @classmethod
    def identity(cls) -> "Activation":
        return cls(IDENTITY)

    @classmethod
    def softmax(cls) -> "Activation":
        return cls(SOFTMAX)

    @classmethod
    def polynomial(cls, degree: int) -> "Activation":
        return cls(POLYNOMIAL, degree)

    @classmethod
    def parse(cls, spec: str) -> "Activation":
        """Parse CLI-style specs: identity | softmax | poly:D."""
        if spec == IDENTITY:
            return cls.identity()
        if spec == SOFTMAX:
            return cls.softmax()
        if spec.startswith("poly:"):
            try:
                return cls.polynomial(int(spec.split(":", 1)[1]))
            except ValueError as exc:
                raise ConfigError(f"bad polynomial degree in {spec!r}") from exc
        raise ConfigError(f"unknown activation spec {spec!r}")

    def label(self) -> str:
        return f"poly:{self.degree}" if self.kind == POLYNOMIAL else self.kind


@dataclass(frozen=True)
class AttentionDomain:
    """Domain the attention scores are computed in."""

    kind: str
    levels: int = 1

    def __post_init__(self):
        if self.kind not in (TIME, FOURIER, WAVELET):
            raise ConfigError(f"unknown attention domain {self.kind!r}")
        if self.kind == WAVELET and self.levels < 1:
            raise ConfigError("wavelet domain needs levels >= 1")

    @classmethod
    def time(cls) -> "AttentionDomain":
        return cls(TIME)

    @classmethod
    def fourier(cls) -> "AttentionDomain":
        return cls(FOURIER)

    @classmethod
    def wavelet(cls, levels: int = 1) -> "AttentionDomain":
        return cls(WAVELET, levels)


def _check_qkv(q, k, v):
    q, k, v = np.asarray(q, float), np.asarray(k, float), np.asarray(v, float)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ShapeError("q, k, v must be 2-D matrices")
    if not (q.shape == k.shape == v.shape):
        raise ShapeError(f"q, k, v shapes differ: {q.shape}, {k.shape}, {v.shape}")
    return q, k, v


def _check_cross(q_src, kv_src):
    q_src, kv_src = np.asarray(q_src, float), np.asarray(kv_src, float)
    if q_src.ndim != 2 or kv_src.ndim != 2:
        raise ShapeError("q_src and kv_src must be 2-D matrices")
    if q_src.shape[1] != kv_src.shape[1]:
        raise ShapeError(
            f"column counts differ: q_src has {q_src.shape[1]}, kv_src has {kv_src.shape[1]}"
        )
    return q_src, kv_src


def _scaled(scores: np.ndarray, act: Activation, dim: int) -> np.ndarray:
    # The identity path skips the 1/sqrt(D) normalization so that the linear
    # equivalence across domains is exact.
    if act.kind == IDENTITY:
        return scores
    return scores / np.sqrt(dim)


def _activate(scores: np.ndarray, act: Activation) -> np.ndarray:
    if act.kind == IDENTITY:
        return scores
    if act.kind == SOFTMAX:
        return softmax_rows(scores)
    return poly_norm_rows(scores, act.degree)


def _weights(scores: np.ndarray, act: Activation) -> np.ndarray:
    """Post-activation score matrix; complex scores go through their modulus."""
    if np.iscomplexobj(scores) and act.kind != IDENTITY:
        return _activate(np.abs(scores), act)
    return _activate(scores, act)


def time_attention(q, k, v, act: Activation) -> np.ndarray:
    """o = act(q k^T / sqrt(D)) v on raw signals."""
    q, k, v = _check_qkv(q, k, v)
    scores = _scaled(q @ k.T, act, q.shape[1])
    return _weights(scores, act) @ v


def fourier_attention(q, k, v, act: Activation) -> np.ndarray:
    """Attention on unitary DFT spectra, mapped back to the time domain."""
    q, k, v = _check_qkv(q, k, v)
    qs, ks, vs = dft(q), dft(k), dft(v)
    scores = _scaled(qs @ np.conj(ks).T, act, q.shape[1])
    return idft(_weights(scores, act) @ vs)


def wavelet_attention(q, k, v, act: Activation, levels: int = 1) -> np.ndarray:
    """Attention on orthogonal Haar coefficients, mapped back to the time domain."""
    q, k, v = _check_qkv(q, k, v)
    basis = wavelet_basis(q.shape[0], levels)
    qw, kw, vw = dwt(q, basis), dwt(k, basis), dwt(v, basis)
    scores = _scaled(qw @ kw.T, act, q.shape[1])
    return idwt(_weights(scores, act) @ vw, basis)


def cross_attention(q_src, kv_src, domain: AttentionDomain, act: Activation) -> np.ndarray:
    """Same pipeline with queries from q_src and keys/values from kv_src."""
    q_src, kv_src = _check_cross(q_src, kv_src)
    dim = q_src.shape[1]
    if domain.kind == TIME:
        scores = _scaled(q_src @ kv_src.T, act, dim)
        return _weights(scores, act) @ kv_src
    if domain.kind == FOURIER:
        qs, ks = dft(q_src), dft(kv_src)
        scores = _scaled(qs @ np.conj(ks).T, act, dim)
        return idft(_weights(scores, act) @ ks)
    basis_q = wavelet_basis(q_src.shape[0], domain.levels)
    basis_kv = wavelet_basis(kv_src.shape[0], domain.levels)
    qw, kw = dwt(q_src, basis_q), dwt(kv_src, basis_kv)
    scores = _scaled(qw @ kw.T, act, dim)
    return idwt(_weights(scores, act) @ kw, basis_q)


def attention_scores(q, k, domain: AttentionDomain, act: Activation) -> np.ndarray:
    """Post-activation score matrix (modulus for complex scores).

    Exposes what the attention ops use internally, for score-map inspection.
    """
    q, k = np.asarray(q, float), np.asarray(k, float)
    if q.shape[1] != k.shape[1]:
        raise ShapeError("q and k must agree on column count")
    dim = q.shape[1]
    if domain.kind == TIME:
        scores = _scaled(q @ k.T, act, dim)
    elif domain.kind == FOURIER:
        scores = _scaled(dft(q) @ np.conj(dft(k)).T, act, dim)
    else:
        bq = wavelet_basis(q.shape[0], domain.levels)
        bk = wavelet_basis(k.shape[0], domain.levels)
        scores = _scaled(dwt(q, bq) @ dwt(k, bk).T, act, dim)
    weights = _weights(scores, act)
    return np.abs(weights) if np.iscomplexobj(weights) else weights
