"""TDformer: seasonal-trend decomposition + MLP trend + attention seasonal branch.

The forecaster splits the context into trend and seasonal parts with the
learnable multi-kernel decomposition, predicts the trend with a RevIN-wrapped
per-channel MLP over the time axis, predicts the seasonal part with an
embed / encoder / decoder / project attention stack (domain configurable),
and adds the two horizon-length forecasts.

Every forward pass here is built on the autodiff tape, so the public numpy
entry points and the training path share one implementation. Inputs may be a
single window (L x D) or a batch (B x L x D).

Ablation variants are pure configuration: seasonal domain time/fourier/wavelet,
trend branch mlp/time-attn, RevIN on/off.

For the wavelet seasonal domain the decoder sequence (context + zero-padded
horizon) is zero-padded further, up to the next power of two, because the Haar
transform only exists at power-of-two lengths; the horizon rows are sliced out
of the same positions either way.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from . import autodiff as ad
from .attention import FOURIER, TIME, WAVELET, Activation, AttentionDomain
from .autodiff import Tensor
from .decomposition import MixerParams
from .errors import ConfigError, DataError, ShapeError
from .numerics import fourier_matrix, is_power_of_two, wavelet_basis

LAYER_NORM_EPS = 1e-5
REVIN_EPS = 1e-5  # stored stddev is sqrt(var + REVIN_EPS**2) >= REVIN_EPS

MLP_BRANCH = "mlp"
TIME_ATTN_BRANCH = "time-attn"


def next_power_of_two(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StackConfig:
    """Shape and domain of one embed/encoder/decoder/project attention stack."""

    context_len: int
    horizon: int
    channels: int
    d_model: int
    d_ff: int
    enc_layers: int
    dec_layers: int
    domain: str
    activation: Activation
    wavelet_levels: int = 1

    @property
    def decoder_len(self) -> int:
        base = self.context_len + self.horizon
        return next_power_of_two(base) if self.domain == WAVELET else base

    def validate(self) -> None:
        if min(self.context_len, self.horizon, self.channels) < 1:
            raise ConfigError("context_len, horizon and channels must be positive")
        if min(self.d_model, self.d_ff) < 1:
            raise ConfigError("d_model and d_ff must be positive")
        if self.enc_layers < 1 or self.dec_layers < 1:
            raise ConfigError("encoder and decoder need at least one layer each")
        if self.domain not in (TIME, FOURIER, WAVELET):
            raise ConfigError(f"unknown attention domain {self.domain!r}")
        if self.domain == WAVELET:
            if not is_power_of_two(self.context_len):
                raise ConfigError(
                    f"wavelet domain requires a power-of-two context length, got {self.context_len}"
                )
            max_levels = int(np.log2(self.context_len))
            if not 1 <= self.wavelet_levels <= max_levels:
                raise ConfigError(
                    f"wavelet levels must be in [1, {max_levels}] for context "
                    f"{self.context_len}, got {self.wavelet_levels}"
                )


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to build a TDformer; ablations are field changes here."""

    context_len: int
    horizon: int
    channels: int
    d_model: int = 32
    d_ff: int = 64
    enc_layers: int = 2
    dec_layers: int = 1
    kernels: tuple = (5, 13, 25)
    seasonal_domain: str = FOURIER
    seasonal_activation: Activation = Activation(  # noqa: RUF009 - frozen value
        "softmax"
    )
    wavelet_levels: int = 2
    trend_branch: str = MLP_BRANCH
    revin: bool = True
    mlp_hidden: Optional[int] = None
    seed: int = 0

    @property
    def hidden_width(self) -> int:
        return self.mlp_hidden if self.mlp_hidden is not None else 2 * self.context_len

    def seasonal_stack(self) -> StackConfig:
        return StackConfig(
            context_len=self.context_len,
            horizon=self.horizon,
            channels=self.channels,
            d_model=self.d_model,
            d_ff=self.d_ff,
            enc_layers=self.enc_layers,
            dec_layers=self.dec_layers,
            domain=self.seasonal_domain,
            activation=self.seasonal_activation,
            wavelet_levels=self.wavelet_levels,
        )

    def trend_stack(self) -> StackConfig:
        # The trend ablation swaps the MLP for a plain time-domain softmax
        # attention stack of the same size.
        return StackConfig(
            context_len=self.context_len,
            horizon=self.horizon,
            channels=self.channels,
            d_model=self.d_model,
            d_ff=self.d_ff,
            enc_layers=self.enc_layers,
            dec_layers=self.dec_layers,
            domain=TIME,
            activation=Activation.softmax(),
        )

    def validate(self) -> None:
        self.seasonal_stack().validate()
        if not self.kernels:
            raise ConfigError("decomposition needs at least one kernel")
        for k in self.kernels:
            if k % 2 == 0 or not 1 <= k <= self.context_len:
                raise ConfigError(
                    f"decomposition kernels must be odd and within the context "
                    f"length {self.context_len}, got {k}"
                )
        if self.trend_branch not in (MLP_BRANCH, TIME_ATTN_BRANCH):
            raise ConfigError(f"unknown trend branch {self.trend_branch!r}")
        if self.hidden_width < 1:
            raise ConfigError("mlp_hidden must be positive")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["seasonal_activation"] = self.seasonal_activation.label()
        out["kernels"] = list(self.kernels)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        raw = dict(raw)
        raw["seasonal_activation"] = Activation.parse(raw["seasonal_activation"])
        raw["kernels"] = tuple(raw["kernels"])
        return cls(**raw)


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------


@dataclass
class RevINParams:
    scale: np.ndarray  # (channels,)
    shift: np.ndarray  # (channels,)


@dataclass
class MLPParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray


@dataclass
class EncoderLayerParams:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    ff_w1: np.ndarray
    ff_b1: np.ndarray
    ff_w2: np.ndarray
    ff_b2: np.ndarray
    ln1_gain: np.ndarray
    ln1_bias: np.ndarray
    ln2_gain: np.ndarray
    ln2_bias: np.ndarray


@dataclass
class DecoderLayerParams:
    self_wq: np.ndarray
    self_wk: np.ndarray
    self_wv: np.ndarray
    self_wo: np.ndarray
    cross_wq: np.ndarray
    cross_wk: np.ndarray
    cross_wv: np.ndarray
    cross_wo: np.ndarray
    ff_w1: np.ndarray
    ff_b1: np.ndarray
    ff_w2: np.ndarray
    ff_b2: np.ndarray
    ln1_gain: np.ndarray
    ln1_bias: np.ndarray
    ln2_gain: np.ndarray
    ln2_bias: np.ndarray
    ln3_gain: np.ndarray
    ln3_bias: np.ndarray


@dataclass
class StackParams:
    embed_w: np.ndarray  # (d_model, channels)
    embed_b: np.ndarray
    encoder: list  # [EncoderLayerParams]
    decoder: list  # [DecoderLayerParams]
    proj_w: np.ndarray  # (channels, d_model)
    proj_b: np.ndarray


@dataclass
class TrendParams:
    revin: Optional[RevINParams]
    mlp: Optional[MLPParams]
    stack: Optional[StackParams]


@dataclass
class TDformerParams:
    mixer: MixerParams
    trend: TrendParams
    seasonal: StackParams


def named_arrays(params, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
    """Depth-first (field order, list index order) traversal of parameter arrays.

    This order defines the checkpoint layout and the gradient/optimizer block
    naming, so it must stay stable.
    """
    if isinstance(params, np.ndarray):
        yield prefix, params
    elif dataclasses.is_dataclass(params):
        for f in dataclasses.fields(params):
            name = f"{prefix}.{f.name}" if prefix else f.name
            yield from named_arrays(getattr(params, f.name), name)
    elif isinstance(params, (list, tuple)):
        for i, item in enumerate(params):
            yield from named_arrays(item, f"{prefix}.{i}")
    # scalars / None / strings carry no parameters


def _map_arrays(params, fn, prefix: str = ""):
    """Rebuild a parameter structure with fn(name, array) applied to each leaf."""
    if isinstance(params, np.ndarray):
        return fn(prefix, params)
    if dataclasses.is_dataclass(params):
        kwargs = {}
        for f in dataclasses.fields(params):
            name = f"{prefix}.{f.name}" if prefix else f.name
            kwargs[f.name] = _map_arrays(getattr(params, f.name), fn, name)
        return type(params)(**kwargs)
    if isinstance(params, list):
        return [_map_arrays(item, fn, f"{prefix}.{i}") for i, item in enumerate(params)]
    if isinstance(params, tuple):
        return tuple(_map_arrays(item, fn, f"{prefix}.{i}") for i, item in enumerate(params))
    return params


def bind_leaves(params):
    """Wrap every parameter array in a gradient-carrying Tensor leaf.

    Returns the Tensor-valued structure and a name -> leaf map.
    """
    leaves: dict[str, Tensor] = {}

    def wrap(name, arr):
        t = ad.leaf(arr)
        leaves[name] = t
        return t

    return _map_arrays(params, wrap), leaves


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------


def _linear(rng, out_dim: int, in_dim: int) -> np.ndarray:
    return rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=(out_dim, in_dim))


def init_mlp(rng, context_len: int, hidden: int, horizon: int) -> MLPParams:
    return MLPParams(
        w1=_linear(rng, hidden, context_len),
        b1=np.zeros(hidden),
        w2=_linear(rng, hidden, hidden),
        b2=np.zeros(hidden),
        w3=_linear(rng, horizon, hidden),
        b3=np.zeros(horizon),
    )


def init_encoder_layer(rng, d_model: int, d_ff: int) -> EncoderLayerParams:
    return EncoderLayerParams(
        wq=_linear(rng, d_model, d_model),
        wk=_linear(rng, d_model, d_model),
        wv=_linear(rng, d_model, d_model),
        wo=_linear(rng, d_model, d_model),
        ff_w1=_linear(rng, d_ff, d_model),
        ff_b1=np.zeros(d_ff),
        ff_w2=_linear(rng, d_model, d_ff),
        ff_b2=np.zeros(d_model),
        ln1_gain=np.ones(d_model),
        ln1_bias=np.zeros(d_model),
        ln2_gain=np.ones(d_model),
        ln2_bias=np.zeros(d_model),
    )


def init_decoder_layer(rng, d_model: int, d_ff: int) -> DecoderLayerParams:
    return DecoderLayerParams(
        self_wq=_linear(rng, d_model, d_model),
        self_wk=_linear(rng, d_model, d_model),
        self_wv=_linear(rng, d_model, d_model),
        self_wo=_linear(rng, d_model, d_model),
        cross_wq=_linear(rng, d_model, d_model),
        cross_wk=_linear(rng, d_model, d_model),
        cross_wv=_linear(rng, d_model, d_model),
        cross_wo=_linear(rng, d_model, d_model),
        ff_w1=_linear(rng, d_ff, d_model),
        ff_b1=np.zeros(d_ff),
        ff_w2=_linear(rng, d_model, d_ff),
        ff_b2=np.zeros(d_model),
        ln1_gain=np.ones(d_model),
        ln1_bias=np.zeros(d_model),
        ln2_gain=np.ones(d_model),
        ln2_bias=np.zeros(d_model),
        ln3_gain=np.ones(d_model),
        ln3_bias=np.zeros(d_model),
    )


def init_stack(rng, cfg: StackConfig) -> StackParams:
    return StackParams(
        embed_w=_linear(rng, cfg.d_model, cfg.channels),
        embed_b=np.zeros(cfg.d_model),
        encoder=[init_encoder_layer(rng, cfg.d_model, cfg.d_ff) for _ in range(cfg.enc_layers)],
        decoder=[init_decoder_layer(rng, cfg.d_model, cfg.d_ff) for _ in range(cfg.dec_layers)],
        proj_w=_linear(rng, cfg.channels, cfg.d_model),
        proj_b=np.zeros(cfg.channels),
    )


def init_tdformer(cfg: ModelConfig) -> TDformerParams:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    mixer = MixerParams.zeros(len(cfg.kernels), cfg.channels)
    revin = (
        RevINParams(scale=np.ones(cfg.channels), shift=np.zeros(cfg.channels))
        if cfg.revin
        else None
    )
    if cfg.trend_branch == MLP_BRANCH:
        trend = TrendParams(
            revin=revin,
            mlp=init_mlp(rng, cfg.context_len, cfg.hidden_width, cfg.horizon),
            stack=None,
        )
    else:
        trend = TrendParams(revin=revin, mlp=None, stack=init_stack(rng, cfg.trend_stack()))
    seasonal = init_stack(rng, cfg.seasonal_stack())
    return TDformerParams(mixer=mixer, trend=trend, seasonal=seasonal)


# ---------------------------------------------------------------------------
# transform constants
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _dft_const(length: int) -> np.ndarray:
    return fourier_matrix(length)


@lru_cache(maxsize=None)
def _idft_const(length: int) -> np.ndarray:
    return fourier_matrix(length).conj().T


@lru_cache(maxsize=None)
def _haar_const(length: int, levels: int) -> np.ndarray:
    levels = min(levels, int(np.log2(length)))
    return wavelet_basis(length, levels).analysis_matrix


# ---------------------------------------------------------------------------
# graph building blocks
# ---------------------------------------------------------------------------


def _affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return ad.add(ad.matmul(x, ad.transpose_lt(w)), b)


def _layer_norm(x: Tensor, gain: Tensor, bias: Tensor) -> Tensor:
    mu = ad.mean(x, axis=-1, keepdims=True)
    centered = ad.sub(x, mu)
    var = ad.mean(ad.square(centered), axis=-1, keepdims=True)
    normed = ad.div(centered, ad.sqrt(ad.add(var, LAYER_NORM_EPS)))
    return ad.add(ad.mul(normed, gain), bias)


def _graph_weights(scores: Tensor, act: Activation, dim: int) -> Tensor:
    """Real attention weights from (possibly complex) scores; identity passes through."""
    if act.kind == "identity":
        return scores
    if np.iscomplexobj(scores.value):
        scores = ad.cabs(scores)
    scaled = ad.mul(scores, np.float64(1.0 / np.sqrt(dim)))
    if act.kind == "softmax":
        return ad.softmax_last(scaled)
    return ad.poly_norm_last(scaled, act.degree)


def _graph_attention(
    q: Tensor, k: Tensor, v: Tensor, domain: str, act: Activation, levels: int
) -> Tensor:
    """Attention on Tensors; q may be longer than k/v (cross attention)."""
    dim = q.value.shape[-1]
    q_len = q.value.shape[-2]
    kv_len = k.value.shape[-2]
    if domain == TIME:
        scores = ad.matmul(q, ad.transpose_lt(k))
        return ad.matmul(_graph_weights(scores, act, dim), v)
    if domain == FOURIER:
        qs = ad.matmul(Tensor(_dft_const(q_len)), q)
        ks = ad.matmul(Tensor(_dft_const(kv_len)), k)
        vs = ad.matmul(Tensor(_dft_const(kv_len)), v)
        scores = ad.matmul(qs, ad.transpose_lt(ad.conj(ks)))
        spectrum = ad.matmul(_graph_weights(scores, act, dim), vs)
        return ad.real(ad.matmul(Tensor(_idft_const(q_len)), spectrum))
    analysis_q = _haar_const(q_len, levels)
    analysis_kv = _haar_const(kv_len, levels)
    qw = ad.matmul(Tensor(analysis_q), q)
    kw = ad.matmul(Tensor(analysis_kv), k)
    vw = ad.matmul(Tensor(analysis_kv), v)
    scores = ad.matmul(qw, ad.transpose_lt(kw))
    coeffs = ad.matmul(_graph_weights(scores, act, dim), vw)
    return ad.matmul(Tensor(analysis_q.T), coeffs)


def _encoder_layer(x: Tensor, p: EncoderLayerParams, cfg: StackConfig) -> Tensor:
    q = ad.matmul(x, ad.transpose_lt(p.wq))
    k = ad.matmul(x, ad.transpose_lt(p.wk))
    v = ad.matmul(x, ad.transpose_lt(p.wv))
    attn = _graph_attention(q, k, v, cfg.domain, cfg.activation, cfg.wavelet_levels)
    x = _layer_norm(ad.add(x, ad.matmul(attn, ad.transpose_lt(p.wo))), p.ln1_gain, p.ln1_bias)
    hidden = ad.relu(_affine(x, p.ff_w1, p.ff_b1))
    x = _layer_norm(ad.add(x, _affine(hidden, p.ff_w2, p.ff_b2)), p.ln2_gain, p.ln2_bias)
    return x


def _decoder_layer(x: Tensor, enc_out: Tensor, p: DecoderLayerParams, cfg: StackConfig) -> Tensor:
    q = ad.matmul(x, ad.transpose_lt(p.self_wq))
    k = ad.matmul(x, ad.transpose_lt(p.self_wk))
    v = ad.matmul(x, ad.transpose_lt(p.self_wv))
    attn = _graph_attention(q, k, v, cfg.domain, cfg.activation, cfg.wavelet_levels)
    x = _layer_norm(ad.add(x, ad.matmul(attn, ad.transpose_lt(p.self_wo))), p.ln1_gain, p.ln1_bias)

    q = ad.matmul(x, ad.transpose_lt(p.cross_wq))
    k = ad.matmul(enc_out, ad.transpose_lt(p.cross_wk))
    v = ad.matmul(enc_out, ad.transpose_lt(p.cross_wv))
    attn = _graph_attention(q, k, v, cfg.domain, cfg.activation, cfg.wavelet_levels)
    x = _layer_norm(ad.add(x, ad.matmul(attn, ad.transpose_lt(p.cross_wo))), p.ln2_gain, p.ln2_bias)

    hidden = ad.relu(_affine(x, p.ff_w1, p.ff_b1))
    x = _layer_norm(ad.add(x, _affine(hidden, p.ff_w2, p.ff_b2)), p.ln3_gain, p.ln3_bias)
    return x


def _stack_forward(x: Tensor, p: StackParams, cfg: StackConfig) -> Tensor:
    """Context (…, L_c, D) -> horizon forecast (…, H, D)."""
    enc = _affine(x, p.embed_w, p.embed_b)
    for layer in p.encoder:
        enc = _encoder_layer(enc, layer, cfg)
    dec = _affine(ad.pad_rows(x, cfg.decoder_len - cfg.context_len), p.embed_w, p.embed_b)
    for layer in p.decoder:
        dec = _decoder_layer(dec, enc, layer, cfg)
    out = _affine(dec, p.proj_w, p.proj_b)
    return ad.slice_rows(out, cfg.context_len, cfg.context_len + cfg.horizon)


def _revin_stats(x: Tensor) -> tuple[Tensor, Tensor]:
    mu = ad.mean(x, axis=-2, keepdims=True)
    var = ad.mean(ad.square(ad.sub(x, mu)), axis=-2, keepdims=True)
    sigma = ad.sqrt(ad.add(var, REVIN_EPS**2))
    return mu, sigma


def _revin_normalize_graph(x: Tensor, affine: Optional[RevINParams]):
    mu, sigma = _revin_stats(x)
    z = ad.div(ad.sub(x, mu), sigma)
    if affine is not None:
        z = ad.add(ad.mul(z, affine.scale), affine.shift)
    return z, (mu, sigma)


def _revin_denormalize_graph(y: Tensor, stats, affine: Optional[RevINParams]) -> Tensor:
    mu, sigma = stats
    if affine is not None:
        y = ad.div(ad.sub(y, affine.shift), affine.scale)
    return ad.add(ad.mul(y, sigma), mu)


def _mlp_time(z: Tensor, p: MLPParams) -> Tensor:
    """Per-channel MLP over the time axis: (…, L, D) -> (…, H, D)."""
    zt = ad.transpose_lt(z)
    h = ad.relu(_affine(zt, p.w1, p.b1))
    h = ad.relu(_affine(h, p.w2, p.b2))
    out = _affine(h, p.w3, p.b3)
    return ad.transpose_lt(out)


def _trend_branch(x_trend: Tensor, p: TrendParams, cfg: ModelConfig) -> Tensor:
    def core(z: Tensor) -> Tensor:
        if p.mlp is not None:
            return _mlp_time(z, p.mlp)
        return _stack_forward(z, p.stack, cfg.trend_stack())

    if p.revin is not None:
        z, stats = _revin_normalize_graph(x_trend, p.revin)
        return _revin_denormalize_graph(core(z), stats, p.revin)
    return core(x_trend)


def _batched_moving_average(x: np.ndarray, kernel: int) -> np.ndarray:
    """Centered replicate-padded moving average along axis -2 for 2-D or 3-D input."""
    if kernel == 1:
        return x.copy()
    half = kernel // 2
    pad = [(0, 0)] * x.ndim
    pad[-2] = (half, half)
    padded = np.pad(x, pad, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, kernel, axis=x.ndim - 2)
    return windows.mean(axis=-1)


def _decompose_graph(x: Tensor, mixer: MixerParams, kernels) -> tuple[Tensor, Tensor]:
    """Multi-kernel decomposition on the tape; gradients flow through the mixer."""
    averages = [Tensor(_batched_moving_average(x.value, k)) for k in kernels]
    logits = _affine(x, mixer.weight, mixer.bias)
    weights = ad.softmax_last(logits)
    trend = ad.mul(ad.take_last_column(weights, 0), averages[0])
    for j in range(1, len(averages)):
        trend = ad.add(trend, ad.mul(ad.take_last_column(weights, j), averages[j]))
    seasonal = ad.sub(x, trend)
    return trend, seasonal


def tdformer_graph(x: Tensor, params: TDformerParams, cfg: ModelConfig) -> Tensor:
    """Full model forward on the tape; params may hold arrays or Tensor leaves."""
    trend, seasonal = _decompose_graph(x, params.mixer, cfg.kernels)
    trend_hat = _trend_branch(trend, params.trend, cfg)
    seasonal_hat = _stack_forward(seasonal, params.seasonal, cfg.seasonal_stack())
    return ad.add(trend_hat, seasonal_hat)


# ---------------------------------------------------------------------------
# public single-window operations
# ---------------------------------------------------------------------------


@dataclass
class RevINState:
    """Per-channel statistics captured by normalize, needed to denormalize."""

    mean: np.ndarray
    std: np.ndarray
    scale: Optional[np.ndarray] = None
    shift: Optional[np.ndarray] = None


def revin_normalize(x, scale=None, shift=None) -> tuple[np.ndarray, RevINState]:
    """Remove per-channel context statistics; optional learnable affine on top."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=-2, keepdims=True)
    std = np.sqrt(x.var(axis=-2, keepdims=True) + REVIN_EPS**2)
    z = (x - mean) / std
    if scale is not None:
        z = z * scale + shift
    return z, RevINState(mean=mean, std=std, scale=scale, shift=shift)


def revin_denormalize(y, state: RevINState) -> np.ndarray:
    """Restore the statistics captured by a prior normalize."""
    y = np.asarray(y, dtype=np.float64)
    if state.scale is not None:
        y = (y - state.shift) / state.scale
    return y * state.std + state.mean


def trend_forecast(x_trend, params: TrendParams, cfg: ModelConfig) -> np.ndarray:
    """Trend-branch forecast of one context window (no gradients recorded)."""
    return _trend_branch(Tensor(np.asarray(x_trend, float)), params, cfg).value


def encoder_forward(x_emb, layers, domain: AttentionDomain, act: Activation) -> np.ndarray:
    """Run embedded input through encoder layers; empty layer list passes through."""
    out = Tensor(np.asarray(x_emb, float))
    cfg = _loose_stack(out.value.shape[-2], out.value.shape[-2], domain, act)
    for layer in layers:
        out = _encoder_layer(out, layer, cfg)
    return out.value


def decoder_forward(x_dec_emb, enc_out, layers, domain: AttentionDomain, act: Activation) -> np.ndarray:
    """Run embedded, zero-padded decoder input through decoder layers."""
    out = Tensor(np.asarray(x_dec_emb, float))
    enc = Tensor(np.asarray(enc_out, float))
    cfg = _loose_stack(out.value.shape[-2], enc.value.shape[-2], domain, act)
    for layer in layers:
        out = _decoder_layer(out, enc, layer, cfg)
    return out.value


def _loose_stack(q_len: int, kv_len: int, domain: AttentionDomain, act: Activation) -> StackConfig:
    # Minimal stand-in config for running layers outside a full model.
    return StackConfig(
        context_len=q_len,
        horizon=1,
        channels=1,
        d_model=1,
        d_ff=1,
        enc_layers=1,
        dec_layers=1,
        domain=domain.kind,
        activation=act,
        wavelet_levels=domain.levels,
    )


def tdformer_forward(x_context, params: TDformerParams, cfg: ModelConfig) -> np.ndarray:
    """Forecast the horizon for one context window (or a batch of them)."""
    x = np.asarray(x_context, dtype=np.float64)
    if x.shape[-2] != cfg.context_len or x.shape[-1] != cfg.channels:
        raise ShapeError(
            f"context shape {x.shape} does not match config "
            f"({cfg.context_len} x {cfg.channels})"
        )
    return tdformer_graph(Tensor(x), params, cfg).value


# ---------------------------------------------------------------------------
# forecaster objects (shared protocol for the training loop)
# ---------------------------------------------------------------------------


class Forecaster:
    """Parameters plus a tape-built forward; subclasses define the graph."""

    params = None

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        return list(named_arrays(self.params))

    def parameter_count(self) -> int:
        return int(sum(a.size for _, a in self.named_parameters()))

    def state_copy(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.named_parameters()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, arr in self.named_parameters():
            arr[...] = state[name]

    def forward_tensor(self, x: np.ndarray, bound=None) -> Tensor:
        raise NotImplementedError

    def forward(self, x) -> np.ndarray:
        return self.forward_tensor(np.asarray(x, dtype=np.float64)).value

    def bind(self):
        """Tensor-leaf view of the parameters for one forward/backward pass."""
        return bind_leaves(self.params)


class TDformer(Forecaster):
    def __init__(self, cfg: ModelConfig, params: Optional[TDformerParams] = None):
        cfg.validate()
        self.cfg = cfg
        self.params = params if params is not None else init_tdformer(cfg)

    def forward_tensor(self, x, bound=None) -> Tensor:
        params = bound if bound is not None else self.params
        return tdformer_graph(ad.as_tensor(x), params, self.cfg)


class AttentionModel(Forecaster):
    """Bare attention forecaster: embed -> encoder -> decoder -> project."""

    def __init__(self, cfg: StackConfig, seed: int = 0, params: Optional[StackParams] = None):
        cfg.validate()
        self.cfg = cfg
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.params = params if params is not None else init_stack(rng, cfg)

    def forward_tensor(self, x, bound=None) -> Tensor:
        params = bound if bound is not None else self.params
        return _stack_forward(ad.as_tensor(x), params, self.cfg)


@dataclass
class MLPModelParams:
    revin: Optional[RevINParams]
    mlp: MLPParams


class TrendMLPModel(Forecaster):
    """RevIN-wrapped per-channel MLP over the time axis (the trend branch alone)."""

    def __init__(
        self,
        context_len: int,
        horizon: int,
        channels: int,
        hidden: Optional[int] = None,
        revin: bool = True,
        seed: int = 0,
        params: Optional[MLPModelParams] = None,
    ):
        if min(context_len, horizon, channels) < 1:
            raise ConfigError("context_len, horizon and channels must be positive")
        self.context_len = context_len
        self.horizon = horizon
        self.channels = channels
        self.hidden = hidden if hidden is not None else 2 * context_len
        self.revin = revin
        self.seed = seed
        if params is not None:
            self.params = params
        else:
            rng = np.random.default_rng(seed)
            affine = (
                RevINParams(scale=np.ones(channels), shift=np.zeros(channels)) if revin else None
            )
            self.params = MLPModelParams(
                revin=affine, mlp=init_mlp(rng, context_len, self.hidden, horizon)
            )

    def forward_tensor(self, x, bound=None) -> Tensor:
        params = bound if bound is not None else self.params
        xt = ad.as_tensor(x)
        if params.revin is not None:
            z, stats = _revin_normalize_graph(xt, params.revin)
            return _revin_denormalize_graph(_mlp_time(z, params.mlp), stats, params.revin)
        return _mlp_time(xt, params.mlp)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path, header: dict, arrays: list[tuple[str, np.ndarray]]) -> None:
    """One JSON header line, then the parameter blocks as little-endian float64.

    Blocks appear in ``named_arrays`` traversal order; the header records each
    block's name and shape so the file is self-describing.
    """
    head = dict(header)
    head["dtype"] = "<f8"
    head["blocks"] = [{"name": n, "shape": list(a.shape)} for n, a in arrays]
    with open(path, "wb") as fh:
        fh.write((json.dumps(head, sort_keys=True) + "\n").encode("utf-8"))
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    arrays = {}
    offset = 0
    for block in header["blocks"]:
        shape = tuple(block["shape"])
        count = int(np.prod(shape)) if shape else 1
        chunk = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        arrays[block["name"]] = chunk.reshape(shape).copy()
        offset += count * 8
    if offset != len(raw):
        raise DataError(f"checkpoint {path} has {len(raw) - offset} trailing bytes")
    return header, arrays
