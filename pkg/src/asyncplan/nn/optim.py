"""AdamW with a linear warm-up / cosine decay schedule."""

from __future__ import annotations

import math

import numpy as np

from .modules import Parameter


class AdamW:
    """Decoupled-weight-decay Adam.

    The learning rate ramps linearly from 0 over `warmup_steps` updates (the
    rate at update 0 is 0, at update `warmup_steps` exactly `lr`), then decays
    along a cosine to 0 at `total_steps`.
    """

    def __init__(
        self,
        params: dict[str, Parameter],
        lr: float = 1e-4,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        weight_decay: float = 0.01,
        warmup_steps: int = 0,
        total_steps: int | None = None,
        lr_scales: dict[str, float] | None = None,
    ):
        self.params = {name: p for name, p in params.items() if p.trainable}
        self.base_lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.warmup_steps = warmup_steps
        self.total_steps = total_steps
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in self.params.items()}
        # per-parameter rate multipliers by name suffix (zero-init gates need
        # them to escape their saddle within desk-scale step counts)
        self.lr_scales = lr_scales or {}
        self._scale = {
            name: next((s for suffix, s in self.lr_scales.items()
                        if name.endswith(suffix)), 1.0)
            for name in self.params
        }

    def lr_at(self, step: int) -> float:
        if self.warmup_steps > 0 and step < self.warmup_steps:
            return self.base_lr * step / self.warmup_steps
        if self.total_steps is None:
            return self.base_lr
        span = max(1, self.total_steps - self.warmup_steps)
        progress = min(1.0, (step - self.warmup_steps) / span)
        return self.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> float:
        """Apply one update using accumulated gradients; returns the lr used."""
        lr = self.lr_at(self.step_count)
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1 ** t
        bias2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            grad = p.grad
            if grad is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            update = (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            rate = lr * self._scale[name]
            if self.weight_decay:
                p.data -= rate * self.weight_decay * p.data
            p.data -= rate * update
        return lr
