"""Central-difference gradient verification."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .modules import Parameter
from .tensor import Tensor


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: dict[str, Parameter],
    eps: float = 1e-6,
    max_entries_per_param: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Compare analytic gradients of `loss_fn` with central differences.

    `loss_fn` must rebuild the computation graph on every call. Returns the
    maximum relative error |a - n| / max(1e-8, |a| + |n|) over all checked
    scalar entries. When `max_entries_per_param` is set, a random subset of
    entries per parameter is checked (rng required for reproducibility).
    """
    for p in params.values():
        p.zero_grad()
    loss = loss_fn()
    loss.backward()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }

    if max_entries_per_param is not None and rng is None:
        rng = np.random.default_rng(0)

    worst = 0.0
    for name, p in params.items():
        flat = p.data.ravel()
        n = flat.size
        if max_entries_per_param is not None and n > max_entries_per_param:
            indices = rng.choice(n, size=max_entries_per_param, replace=False)
        else:
            indices = range(n)
        a_flat = analytic[name].ravel()
        for i in indices:
            original = flat[i]
            flat[i] = original + eps
            f_plus = float(loss_fn().data)
            flat[i] = original - eps
            f_minus = float(loss_fn().data)
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * eps)
            rel = abs(a_flat[i] - numeric) / max(1e-8, abs(a_flat[i]) + abs(numeric))
            worst = max(worst, rel)
    return worst
