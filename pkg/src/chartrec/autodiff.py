"""Minimal reverse-mode autodiff over numpy arrays.

Supports exactly the operations the recurrent scorer needs: broadcasting
arithmetic, (batched) matmul, pointwise nonlinearities, axis softmax,
concat/stack/slice plumbing and reductions — plus custom ops like the fused
GRU cell, which plug in a hand-written backward.

Gradient recording is controlled by ``no_grad()``; inference paths run with
plain numpy arrays and never touch this module.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

_grad_enabled = True


@contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "_parents", "_bwd")

    def __init__(self, data, parents=(), bwd=None):
        self.data = np.asarray(data)
        self.grad = None
        self._parents = parents if _grad_enabled else ()
        self._bwd = bwd if _grad_enabled else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() needs a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._bwd is not None and node.grad is not None:
                node._bwd(node.grad)

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            if isinstance(g, np.ndarray) and g.shape == self.data.shape:
                self.grad = g.copy()
            else:
                self.grad = np.zeros_like(self.data)
                self.grad += g
        else:
            self.grad += g

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _binary(a, b, out_data, da, db) -> Tensor:
    """Gradients flow only into Tensor operands; raw arrays are constants."""
    a_t = isinstance(a, Tensor)
    b_t = isinstance(b, Tensor)
    parents = tuple(x for x in (a, b) if isinstance(x, Tensor))

    def bwd(g):
        if a_t:
            a.accumulate(_unbroadcast(da(g), a.data.shape))
        if b_t:
            b.accumulate(_unbroadcast(db(g), b.data.shape))

    return Tensor(out_data, parents, bwd)


def _data(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def add(a, b) -> Tensor:
    return _binary(a, b, _data(a) + _data(b), lambda g: g, lambda g: g)


def sub(a, b) -> Tensor:
    return _binary(a, b, _data(a) - _data(b), lambda g: g, lambda g: -g)


def mul(a, b) -> Tensor:
    da, db = _data(a), _data(b)
    return _binary(a, b, da * db, lambda g: g * db, lambda g: g * da)


def matmul(a, b) -> Tensor:
    """2D/3D matmul; 3D @ 2D applies the weight to the trailing axis."""
    a, b = _wrap(a), _wrap(b)
    out = a.data @ b.data

    def bwd(g):
        da = g @ np.swapaxes(b.data, -1, -2)
        db = np.swapaxes(a.data, -1, -2) @ g
        a.accumulate(_unbroadcast(da, a.data.shape))
        b.accumulate(_unbroadcast(db, b.data.shape))

    return Tensor(out, (a, b), bwd)


def tanh(x) -> Tensor:
    x = _wrap(x)
    y = np.tanh(x.data)
    return Tensor(y, (x,), lambda g: x.accumulate(g * (1.0 - y * y)))


def sigmoid(x) -> Tensor:
    x = _wrap(x)
    y = 1.0 / (1.0 + np.exp(-x.data))
    return Tensor(y, (x,), lambda g: x.accumulate(g * y * (1.0 - y)))


def log(x) -> Tensor:
    x = _wrap(x)
    return Tensor(np.log(x.data), (x,), lambda g: x.accumulate(g / x.data))


def clip(x, lo: float, hi: float) -> Tensor:
    """Clamp with straight-through gradient inside the bounds, zero outside."""
    x = _wrap(x)
    y = np.clip(x.data, lo, hi)
    inside = ((x.data > lo) & (x.data < hi)).astype(x.data.dtype)
    return Tensor(y, (x,), lambda g: x.accumulate(g * inside))


def softmax(x, axis: int = -1) -> Tensor:
    x = _wrap(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def bwd(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        x.accumulate(y * (g - dot))

    return Tensor(y, (x,), bwd)


def concat(parts, axis: int = -1) -> Tensor:
    parts = [_wrap(p) for p in parts]
    out = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bwd(g):
        for p, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis if axis >= 0 else g.ndim + axis] = slice(start, stop)
            p.accumulate(g[tuple(idx)])

    return Tensor(out, tuple(parts), bwd)


def stack_axis1(parts) -> Tensor:
    """Stack a list of [B, D] tensors into [B, T, D]."""
    parts = [_wrap(p) for p in parts]
    out = np.stack([p.data for p in parts], axis=1)

    def bwd(g):
        for t, p in enumerate(parts):
            p.accumulate(g[:, t])

    return Tensor(out, tuple(parts), bwd)


def index_axis1(x, t: int) -> Tensor:
    """x[:, t] for a [B, T, ...] tensor."""
    x = _wrap(x)
    out = x.data[:, t]

    def bwd(g):
        full = np.zeros_like(x.data)
        full[:, t] = g
        x.accumulate(full)

    return Tensor(out, (x,), bwd)


def narrow(x, axis: int, start: int, length: int) -> Tensor:
    x = _wrap(x)
    idx = [slice(None)] * x.data.ndim
    idx[axis if axis >= 0 else x.data.ndim + axis] = slice(start, start + length)
    idx = tuple(idx)
    out = x.data[idx]

    def bwd(g):
        full = np.zeros_like(x.data)
        full[idx] = g
        x.accumulate(full)

    return Tensor(out, (x,), bwd)


def reshape(x, shape) -> Tensor:
    x = _wrap(x)
    out = x.data.reshape(shape)
    return Tensor(out, (x,), lambda g: x.accumulate(g.reshape(x.data.shape)))


def tsum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _wrap(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def bwd(g):
        gg = g
        if axis is not None and not keepdims:
            gg = np.expand_dims(g, axis)
        x.accumulate(np.broadcast_to(gg, x.data.shape))

    return Tensor(out, (x,), bwd)


def custom_op(inputs, out_data, bwd) -> Tensor:
    """Wrap a hand-written forward/backward (e.g. a fused kernel).

    ``bwd(g)`` must return one gradient array per input, in order.
    """
    inputs = tuple(_wrap(x) for x in inputs)

    def backprop(g):
        grads = bwd(g)
        for x, dx in zip(inputs, grads):
            if dx is not None:
                x.accumulate(dx)

    return Tensor(out_data, inputs, backprop)
