"""Minimal reverse-mode tape over numpy arrays, real or complex.

Every operation builds a fresh node holding its value and one vector-Jacobian
closure per differentiable parent; ``backward`` walks the tape once in reverse
topological order. Graphs are built per forward pass and thrown away, so there
is no state to reset between steps.

Complex tensors store gradients in the convention grad = dL/d(Re) + i*dL/d(Im)
for a real-valued loss L. Under that convention a linear map back-propagates
through its conjugate transpose (matmul below), elementwise products pick up a
conjugate of the other factor, and |z| differentiates to g * z / |z|. Real
parents of mixed real/complex ops receive the real part of the complex
gradient, which is exactly dL/d(parent).
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


class Tensor:
    __slots__ = ("value", "parents", "grad", "requires_grad")

    def __init__(self, value, requires_grad: bool = False, parents=()):
        self.value = value if isinstance(value, np.ndarray) else np.asarray(value, dtype=np.float64)
        self.parents = tuple(parents)
        self.requires_grad = requires_grad or any(p.requires_grad for p, _ in parents)
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def leaf(value: np.ndarray) -> Tensor:
    """Wrap a parameter array as a gradient-carrying leaf."""
    return Tensor(value, requires_grad=True)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _fit(parent: Tensor, grad: np.ndarray) -> np.ndarray:
    """Match a propagated gradient to the parent's dtype and shape."""
    if not np.iscomplexobj(parent.value) and np.iscomplexobj(grad):
        grad = grad.real
    return _unbroadcast(grad, parent.value.shape)


def _links(pairs):
    """Keep vjp links only for parents that need gradients."""
    return tuple((p, fn) for p, fn in pairs if p.requires_grad)


def backward(root: Tensor, seed=None) -> None:
    """Accumulate gradients of ``root`` into every reachable requires_grad leaf."""
    if seed is None:
        seed = np.ones_like(root.value)
    order: list[Tensor] = []
    seen = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node.parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    root.grad = np.asarray(seed)
    for node in reversed(order):
        grad = node.grad
        if grad is None:
            continue
        for parent, vjp in node.parents:
            contribution = vjp(grad)
            if parent.grad is None:
                parent.grad = contribution
            else:
                parent.grad = parent.grad + contribution


# ---------------------------------------------------------------------------
# primitive operations
# ---------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        a.value + b.value,
        parents=_links([(a, lambda g: _fit(a, g)), (b, lambda g: _fit(b, g))]),
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        a.value - b.value,
        parents=_links([(a, lambda g: _fit(a, g)), (b, lambda g: _fit(b, -g))]),
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(-a.value, parents=_links([(a, lambda g: _fit(a, -g))]))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        a.value * b.value,
        parents=_links(
            [
                (a, lambda g: _fit(a, g * np.conj(b.value))),
                (b, lambda g: _fit(b, g * np.conj(a.value))),
            ]
        ),
    )


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        a.value / b.value,
        parents=_links(
            [
                (a, lambda g: _fit(a, g * np.conj(1.0 / b.value))),
                (b, lambda g: _fit(b, g * np.conj(-a.value / b.value**2))),
            ]
        ),
    )


def _swap(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(
        np.matmul(a.value, b.value),
        parents=_links(
            [
                (a, lambda g: _fit(a, np.matmul(g, np.conj(_swap(b.value))))),
                (b, lambda g: _fit(b, np.matmul(np.conj(_swap(a.value)), g))),
            ]
        ),
    )


def transpose_lt(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(_swap(a.value), parents=_links([(a, lambda g: _fit(a, _swap(g)))]))


def conj(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(np.conj(a.value), parents=_links([(a, lambda g: _fit(a, np.conj(g)))]))


def cabs(a) -> Tensor:
    """Entrywise modulus of a complex tensor (real output)."""
    a = as_tensor(a)
    mod = np.abs(a.value)

    def vjp(g):
        safe = np.where(mod == 0.0, 1.0, mod)
        return _fit(a, g * a.value / safe)

    return Tensor(mod, parents=_links([(a, vjp)]))


def real(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(
        np.ascontiguousarray(a.value.real),
        parents=_links([(a, lambda g: g.astype(np.complex128))]),
    )


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.value > 0
    return Tensor(np.where(mask, a.value, 0.0), parents=_links([(a, lambda g: _fit(a, g * mask))]))


def abs_real(a) -> Tensor:
    a = as_tensor(a)
    sign = np.sign(a.value)
    return Tensor(np.abs(a.value), parents=_links([(a, lambda g: _fit(a, g * sign))]))


def square(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.value**2, parents=_links([(a, lambda g: _fit(a, g * 2.0 * np.conj(a.value)))]))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    root = np.sqrt(a.value)
    return Tensor(root, parents=_links([(a, lambda g: _fit(a, g / (2.0 * root)))]))


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    value = a.value.mean(axis=axis, keepdims=keepdims)
    count = a.value.size if axis is None else np.prod([a.value.shape[ax] for ax in np.atleast_1d(axis)])

    def vjp(g):
        g = np.asarray(g)
        if not keepdims and axis is not None:
            g = np.expand_dims(g, axis)
        if axis is None and g.ndim == 0:
            g = np.broadcast_to(g, a.value.shape)
        return _fit(a, np.broadcast_to(g, a.value.shape) / count)

    return Tensor(value, parents=_links([(a, vjp)]))


def softmax_last(a) -> Tensor:
    """Softmax along the last axis with max-subtraction; real input only."""
    a = as_tensor(a)
    shifted = a.value - a.value.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def vjp(g):
        inner = (g * s).sum(axis=-1, keepdims=True)
        return _fit(a, s * (g - inner))

    return Tensor(s, parents=_links([(a, vjp)]))


def poly_norm_last(a, degree: int) -> Tensor:
    """x_i^d / sum_j x_j^d along the last axis; strictly positive real input."""
    a = as_tensor(a)
    x = a.value
    scaled = x / x.max(axis=-1, keepdims=True)
    powered = scaled**degree
    total = powered.sum(axis=-1, keepdims=True)
    p = powered / total

    def vjp(g):
        inner = (g * p).sum(axis=-1, keepdims=True)
        return _fit(a, degree / x * powered / total * (g - inner))

    return Tensor(p, parents=_links([(a, vjp)]))


def slice_rows(a, start: int, stop: int) -> Tensor:
    """Slice [start:stop] along the second-to-last axis."""
    a = as_tensor(a)
    value = a.value[..., start:stop, :]

    def vjp(g):
        out = np.zeros_like(a.value)
        out[..., start:stop, :] = g
        return out

    return Tensor(value, parents=_links([(a, vjp)]))


def pad_rows(a, count: int) -> Tensor:
    """Append ``count`` zero rows along the second-to-last axis."""
    a = as_tensor(a)
    if count < 0:
        raise ShapeError("pad_rows needs a nonnegative count")
    if count == 0:
        return a
    pad_shape = a.value.shape[:-2] + (count,) + a.value.shape[-1:]
    value = np.concatenate([a.value, np.zeros(pad_shape, dtype=a.value.dtype)], axis=-2)
    rows = a.value.shape[-2]
    return Tensor(value, parents=_links([(a, lambda g: g[..., :rows, :])]))


def take_last_column(a, index: int) -> Tensor:
    """Select one index of the last axis, keeping it as a size-1 axis."""
    a = as_tensor(a)
    value = a.value[..., index : index + 1]

    def vjp(g):
        out = np.zeros_like(a.value)
        out[..., index : index + 1] = g
        return out

    return Tensor(value, parents=_links([(a, vjp)]))
