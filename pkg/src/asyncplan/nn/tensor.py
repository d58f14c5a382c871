"""A small fp64 reverse-mode autodiff kernel on numpy buffers.

Tensors are at most 4-dimensional. Every operator records its backward
closure; `Tensor.backward()` walks the graph in reverse topological order and
accumulates exact analytic gradients. Forward evaluation is deterministic.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


def _as_data(value) -> np.ndarray:
    if isinstance(value, Tensor):
        raise TypeError("expected raw array, got Tensor")
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim > 4:
        raise ShapeError(f"tensors support up to 4 dims, got shape {arr.shape}")
    return arr


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcasted gradient back to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_data(data)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    # -- construction helpers -------------------------------------------------

    @classmethod
    def _result(cls, data: np.ndarray, parents: Sequence["Tensor"], backward) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out.requires_grad = any(p.requires_grad for p in parents)
        out._parents = tuple(parents) if out.requires_grad else ()
        out._backward = backward if out.requires_grad else None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, grad={'set' if self.grad is not None else 'none'})"

    # -- autograd -------------------------------------------------------------

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without gradient requires a scalar output")
            grad = np.ones_like(self.data)
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self.grad = np.asarray(grad, dtype=np.float64).reshape(self.shape)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def _accumulate(self, grad: np.ndarray) -> None:
        # Gradients are never mutated in place, so aliasing views is safe.
        if self.grad is None:
            self.grad = grad
        else:
            self.grad = self.grad + grad

    # -- elementwise arithmetic -------------------------------------------------

    def _coerce(self, other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(np.asarray(other, dtype=np.float64))

    def __add__(self, other) -> "Tensor":
        other = self._coerce(other)
        data = self.data + other.data

        def backward(grad):
            if self.requires_grad:
                self._accumulate(_unbroadcast(grad, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(grad, other.shape))

        return Tensor._result(data, (self, other), backward)

    __radd__ = __add__

    def __mul__(self, other) -> "Tensor":
        other = self._coerce(other)
        data = self.data * other.data

        def backward(grad):
            if self.requires_grad:
                self._accumulate(_unbroadcast(grad * other.data, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(grad * self.data, other.shape))

        return Tensor._result(data, (self, other), backward)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other) -> "Tensor":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Tensor":
        return self._coerce(other) + (-self)

    def __truediv__(self, other) -> "Tensor":
        if isinstance(other, Tensor):
            return self * other ** -1.0
        return self * (1.0 / float(other))

    def __pow__(self, exponent: float) -> "Tensor":
        data = self.data ** exponent

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad * exponent * self.data ** (exponent - 1.0))

        return Tensor._result(data, (self,), backward)

    # -- shape ops --------------------------------------------------------------

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        data = self.data.reshape(shape)
        if data.ndim > 4:
            raise ShapeError(f"reshape to {data.shape} exceeds 4 dims")
        original = self.shape

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad.reshape(original))

        return Tensor._result(data, (self,), backward)

    def swapaxes(self, a: int, b: int) -> "Tensor":
        data = np.ascontiguousarray(self.data.swapaxes(a, b))

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad.swapaxes(a, b))

        return Tensor._result(data, (self,), backward)

    @property
    def T(self) -> "Tensor":
        return self.swapaxes(-1, -2)

    def __getitem__(self, index) -> "Tensor":
        data = np.array(self.data[index], dtype=np.float64)  # copy; preserves 0-d shape
        shape = data.shape

        def backward(grad):
            if self.requires_grad:
                full = np.zeros_like(self.data)
                np.add.at(full, index, grad.reshape(shape))
                self._accumulate(full)

        return Tensor._result(data, (self,), backward)

    # -- matmul -------------------------------------------------------------------

    def __matmul__(self, other: "Tensor") -> "Tensor":
        other = self._coerce(other)
        if self.shape[-1] != other.shape[-2 if other.ndim > 1 else 0]:
            raise ShapeError(f"matmul mismatch: {self.shape} @ {other.shape}")
        data = np.matmul(self.data, other.data)

        def backward(grad):
            if self.requires_grad:
                g = np.matmul(grad, np.swapaxes(other.data, -1, -2))
                self._accumulate(_unbroadcast(g, self.shape))
            if other.requires_grad:
                g = np.matmul(np.swapaxes(self.data, -1, -2), grad)
                other._accumulate(_unbroadcast(g, other.shape))

        return Tensor._result(data, (self, other), backward)

    # -- nonlinearities -------------------------------------------------------------

    def relu(self) -> "Tensor":
        mask = self.data > 0
        data = np.where(mask, self.data, 0.0)

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad * mask)

        return Tensor._result(data, (self,), backward)

    def tanh(self) -> "Tensor":
        data = np.tanh(self.data)

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad * (1.0 - data * data))

        return Tensor._result(data, (self,), backward)

    def gelu(self) -> "Tensor":
        # tanh approximation; exact analytic derivative of the same expression
        c = math.sqrt(2.0 / math.pi)
        x = self.data
        x_sq = x * x
        t = np.tanh(c * (x + 0.044715 * x_sq * x))
        data = 0.5 * x * (1.0 + t)

        def backward(grad):
            if self.requires_grad:
                d_inner = c * (1.0 + 3 * 0.044715 * x_sq)
                local = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner
                self._accumulate(grad * local)

        return Tensor._result(data, (self,), backward)

    def exp(self) -> "Tensor":
        data = np.exp(self.data)

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad * data)

        return Tensor._result(data, (self,), backward)

    def log(self) -> "Tensor":
        data = np.log(self.data)

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad / self.data)

        return Tensor._result(data, (self,), backward)

    def abs(self) -> "Tensor":
        data = np.abs(self.data)
        sign = np.sign(self.data)

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad * sign)

        return Tensor._result(data, (self,), backward)

    def clamp(self, lo: float, hi: float) -> "Tensor":
        data = np.clip(self.data, lo, hi)
        mask = (self.data > lo) & (self.data < hi)

        def backward(grad):
            if self.requires_grad:
                self._accumulate(grad * mask)

        return Tensor._result(data, (self,), backward)

    # -- reductions -----------------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        data = self.data.sum(axis=axis, keepdims=keepdims)
        data = np.asarray(data, dtype=np.float64)

        def backward(grad):
            if not self.requires_grad:
                return
            g = grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.shape).copy())

        return Tensor._result(data, (self,), backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        elif isinstance(axis, tuple):
            count = int(np.prod([self.data.shape[a] for a in axis]))
        else:
            count = self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def max(self, axis: int, keepdims: bool = False) -> "Tensor":
        data = self.data.max(axis=axis, keepdims=keepdims)
        argmax = np.expand_dims(self.data.argmax(axis=axis), axis)  # ties route to the first

        def backward(grad):
            if not self.requires_grad:
                return
            g = grad if keepdims else np.expand_dims(grad, axis)
            full = np.zeros_like(self.data)
            np.put_along_axis(full, argmax, g, axis)
            self._accumulate(full)

        return Tensor._result(np.asarray(data, dtype=np.float64), (self,), backward)


# -- free functions ------------------------------------------------------------------


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(grad):
        if x.requires_grad:
            inner = (grad * data).sum(axis=axis, keepdims=True)
            x._accumulate(data * (grad - inner))

    return Tensor._result(data, (x,), backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    data = shifted - lse
    soft = np.exp(data)

    def backward(grad):
        if x.requires_grad:
            x._accumulate(grad - soft * grad.sum(axis=axis, keepdims=True))

    return Tensor._result(data, (x,), backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [t if isinstance(t, Tensor) else Tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(grad):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * grad.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(np.ascontiguousarray(grad[tuple(idx)]))

    return Tensor._result(data, tuple(tensors), backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [t if isinstance(t, Tensor) else Tensor(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward(grad):
        for i, t in enumerate(tensors):
            if t.requires_grad:
                t._accumulate(np.ascontiguousarray(np.take(grad, i, axis=axis)))

    return Tensor._result(data, tuple(tensors), backward)


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup into an embedding table; gradients scatter-add into rows."""
    ids = np.asarray(ids, dtype=np.int64)
    data = weight.data[ids]

    def backward(grad):
        if weight.requires_grad:
            full = np.zeros_like(weight.data)
            np.add.at(full, ids, grad)
            weight._accumulate(full)

    return Tensor._result(data, (weight,), backward)
