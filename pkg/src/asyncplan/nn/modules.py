"""Module tree with named parameters, plus the standard layers."""

from __future__ import annotations

import math
from typing import Iterator, Optional

import numpy as np

from .tensor import ShapeError, Tensor, concat, embedding, softmax


class Parameter(Tensor):
    """A trainable tensor registered by name in a module tree."""

    __slots__ = ("trainable",)

    def __init__(self, data, trainable: bool = True):
        super().__init__(data, requires_grad=True)
        self.trainable = trainable


class Module:
    """Base class; parameters and submodules register by attribute assignment."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            path = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{path}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Parameter):
                        yield f"{path}.{i}", item
                    elif isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{i}.")

    def parameters(self) -> dict[str, Parameter]:
        params: dict[str, Parameter] = {}
        for name, p in self.named_parameters():
            if name in params:
                raise ValueError(f"duplicate parameter name {name!r}")
            params[name] = p
        return params

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.zero_grad()

    def n_parameters(self) -> int:
        return sum(p.data.size for _, p in self.named_parameters())


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        self.weight = Parameter(xavier_uniform(rng, in_dim, out_dim))
        self.bias = Parameter(np.zeros(out_dim)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.weight.shape[0]:
            raise ShapeError(f"linear expects last dim {self.weight.shape[0]}, got {x.shape}")
        out = x @ self.weight
        return out + self.bias if self.bias is not None else out


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gain = Parameter(np.ones(dim))
        self.shift = Parameter(np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        normed = centered * (var + self.eps) ** -0.5
        return normed * self.gain + self.shift


class Embedding(Module):
    def __init__(self, vocab: int, dim: int, rng: np.random.Generator):
        self.weight = Parameter(rng.normal(0.0, 0.02, size=(vocab, dim)))

    def __call__(self, ids: np.ndarray) -> Tensor:
        return embedding(self.weight, ids)


class MLP(Module):
    """Two-layer perceptron with a configurable activation."""

    def __init__(self, in_dim: int, hidden: int, out_dim: int, rng: np.random.Generator,
                 activation: str = "gelu"):
        self.fc1 = Linear(in_dim, hidden, rng)
        self.fc2 = Linear(hidden, out_dim, rng)
        self.activation = activation

    def __call__(self, x: Tensor) -> Tensor:
        h = self.fc1(x)
        h = h.gelu() if self.activation == "gelu" else h.relu()
        return self.fc2(h)


def attention(q: Tensor, k: Tensor, v: Tensor, key_mask: Optional[np.ndarray] = None) -> Tensor:
    """Scaled dot-product attention over the last two axes.

    q: (..., Nq, C), k/v: (..., Nk, C). key_mask, when given, is boolean
    (..., Nk) or (Nk,); False keys are excluded from the softmax.
    """
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = (q @ k.T) * scale
    if key_mask is not None:
        mask = np.asarray(key_mask, dtype=bool)
        bias = np.where(mask, 0.0, -1e30)
        if bias.ndim < scores.ndim:
            bias = bias.reshape((1,) * (scores.ndim - bias.ndim - 1) + (1, bias.shape[-1])) \
                if bias.ndim == 1 else np.expand_dims(bias, -2)
        scores = scores + Tensor(np.broadcast_to(bias, scores.shape))
    return softmax(scores, axis=-1) @ v


class MultiHeadAttention(Module):
    """Multi-head attention where query/key/value may come from different sources."""

    def __init__(self, dim: int, n_heads: int, rng: np.random.Generator):
        if dim % n_heads:
            raise ShapeError(f"dim {dim} not divisible by {n_heads} heads")
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.q_proj = Linear(dim, dim, rng)
        # softmax is shift-invariant in the keys, so a key bias is a dead
        # parameter; leaving it out keeps every gradient check meaningful
        self.k_proj = Linear(dim, dim, rng, bias=False)
        self.v_proj = Linear(dim, dim, rng)
        self.out_proj = Linear(dim, dim, rng)

    def _split(self, x: Tensor) -> Tensor:
        # (B, N, D) -> (B, H, N, hd); (N, D) -> (H, N, hd)
        if x.ndim == 2:
            n, _ = x.shape
            return x.reshape(n, self.n_heads, self.head_dim).swapaxes(0, 1)
        b, n, _ = x.shape
        return x.reshape(b, n, self.n_heads, self.head_dim).swapaxes(1, 2)

    def _merge(self, x: Tensor) -> Tensor:
        if x.ndim == 3:
            h, n, hd = x.shape
            return x.swapaxes(0, 1).reshape(n, h * hd)
        b, h, n, hd = x.shape
        return x.swapaxes(1, 2).reshape(b, n, h * hd)

    def attend(self, query: Tensor, key_source: Tensor,
               key_mask: Optional[np.ndarray] = None) -> Tensor:
        """Projected attention WITHOUT the output projection (see blocks that
        sum several branches before projecting)."""
        q = self._split(self.q_proj(query))
        k = self._split(self.k_proj(key_source))
        v = self._split(self.v_proj(key_source))
        if key_mask is not None and np.asarray(key_mask).ndim == 2:
            key_mask = np.asarray(key_mask)[:, None, :]  # (B, 1, Nk) broadcast over heads
        return self._merge(attention(q, k, v, key_mask))

    def __call__(self, query: Tensor, key_source: Tensor,
                 key_mask: Optional[np.ndarray] = None) -> Tensor:
        return self.out_proj(self.attend(query, key_source, key_mask))
