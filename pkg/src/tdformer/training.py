"""MSE objective, reverse-mode gradients, Adam, and the training loop.

The loop is plain mini-batch SGD-style training: shuffle the training windows
with a seeded generator each epoch, take Adam steps on the batched MSE,
validate after every epoch, and keep the parameters with the lowest
validation MSE. Everything is deterministic given the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, GradientError, ShapeError
from .model import Forecaster

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def mse(pred, target) -> float:
    pred, target = np.asarray(pred, float), np.asarray(target, float)
    if pred.shape != target.shape:
        raise ShapeError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def mae(pred, target) -> float:
    pred, target = np.asarray(pred, float), np.asarray(target, float)
    if pred.shape != target.shape:
        raise ShapeError(f"mae shapes differ: {pred.shape} vs {target.shape}")
    return float(np.mean(np.abs(pred - target)))


def mse_loss(pred: ad.Tensor, target: np.ndarray) -> ad.Tensor:
    if pred.value.shape != target.shape:
        raise ShapeError(f"loss shapes differ: {pred.value.shape} vs {target.shape}")
    return ad.mean(ad.square(ad.sub(pred, ad.Tensor(target))))


def backward(loss: ad.Tensor, leaves: dict[str, ad.Tensor]) -> dict[str, np.ndarray]:
    """Gradients for every leaf; aborts on non-finite blocks, naming the block."""
    ad.backward(loss)
    grads: dict[str, np.ndarray] = {}
    for name, tensor in leaves.items():
        g = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.value)
        if not np.all(np.isfinite(g)):
            raise GradientError(f"non-finite gradient in parameter block {name!r}")
        grads[name] = np.asarray(g, dtype=np.float64)
    return grads


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    patience: int = 10
    grad_clip: Optional[float] = None

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: list[tuple[str, np.ndarray]]) -> "AdamState":
        return cls(
            m={name: np.zeros_like(arr) for name, arr in params},
            v={name: np.zeros_like(arr) for name, arr in params},
        )


def adam_step(
    params: list[tuple[str, np.ndarray]],
    grads: dict[str, np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> None:
    """Standard bias-corrected Adam update, applied in place."""
    state.t += 1
    if cfg.grad_clip is not None:
        norm = np.sqrt(sum(float(np.sum(g**2)) for g in grads.values()))
        if norm > cfg.grad_clip:
            scale = cfg.grad_clip / norm
            grads = {k: g * scale for k, g in grads.items()}
    correction1 = 1.0 - ADAM_BETA1**state.t
    correction2 = 1.0 - ADAM_BETA2**state.t
    for name, arr in params:
        g = grads[name]
        state.m[name] = ADAM_BETA1 * state.m[name] + (1.0 - ADAM_BETA1) * g
        state.v[name] = ADAM_BETA2 * state.v[name] + (1.0 - ADAM_BETA2) * g**2
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        arr -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def _stack_windows(windows) -> tuple[np.ndarray, np.ndarray]:
    contexts = np.stack([w.context for w in windows])
    targets = np.stack([w.horizon_target for w in windows])
    return contexts, targets


def evaluate(model: Forecaster, windows, batch_size: int = 256) -> tuple[float, float]:
    """Mean MSE/MAE over windows, computed without recording gradients."""
    if not windows:
        raise ConfigError("cannot evaluate on an empty window list")
    sq_sum = 0.0
    abs_sum = 0.0
    count = 0
    for start in range(0, len(windows), batch_size):
        chunk = windows[start : start + batch_size]
        contexts, targets = _stack_windows(chunk)
        preds = model.forward(contexts)
        sq_sum += float(np.sum((preds - targets) ** 2))
        abs_sum += float(np.sum(np.abs(preds - targets)))
        count += targets.size
    return sq_sum / count, abs_sum / count


@dataclass
class TrainResult:
    train_curve: list = field(default_factory=list)
    val_curve: list = field(default_factory=list)
    best_epoch: int = 0
    test_mse: float = float("nan")
    test_mae: float = float("nan")


def train(
    model: Forecaster,
    train_windows,
    val_windows,
    test_windows,
    cfg: TrainConfig,
) -> TrainResult:
    """Fit the model and return curves plus test metrics at the best-val epoch.

    With epochs=0 the initial parameters are evaluated as-is.
    """
    cfg.validate()
    if not train_windows or not val_windows or not test_windows:
        raise ConfigError("train/val/test splits must all be non-empty")
    rng = np.random.default_rng(cfg.seed)
    params = model.named_parameters()
    state = AdamState.for_params(params)
    result = TrainResult()
    best_state = model.state_copy()
    best_val = float("inf")
    since_best = 0

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_windows))
        epoch_loss = 0.0
        seen = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_windows[i] for i in order[start : start + cfg.batch_size]]
            contexts, targets = _stack_windows(batch)
            bound, leaves = model.bind()
            pred = model.forward_tensor(contexts, bound=bound)
            loss = mse_loss(pred, targets)
            grads = backward(loss, leaves)
            adam_step(params, grads, state, cfg)
            epoch_loss += float(loss.value) * len(batch)
            seen += len(batch)
        result.train_curve.append(epoch_loss / seen)
        val_mse, _ = evaluate(model, val_windows)
        result.val_curve.append(val_mse)
        if val_mse < best_val:
            best_val = val_mse
            best_state = model.state_copy()
            result.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if cfg.patience and since_best >= cfg.patience:
                break

    model.load_state(best_state)
    result.test_mse, result.test_mae = evaluate(model, test_windows)
    return result
