"""Loss functions over autodiff tensors.

Reductions: `l1`, `cross_entropy`, and `binary_cross_entropy` return means;
`gaussian_nll` returns the sum over all elements (it is accumulated over
timesteps by callers). The Gaussian constant log(2*pi) is dropped throughout,
which shifts values but not gradients.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, log_softmax

LOG_SIGMA_CLAMP = 5.0


def _check_finite(*tensors: Tensor) -> None:
    for t in tensors:
        if not np.all(np.isfinite(t.data)):
            raise ValueError("loss input contains non-finite values")


def l1(pred: Tensor, target) -> Tensor:
    """Mean absolute error over all elements."""
    target = target if isinstance(target, Tensor) else Tensor(target)
    _check_finite(pred, target)
    return (pred - target).abs().mean()


def cross_entropy(logits: Tensor, classes, weights=None) -> Tensor:
    """Mean negative log-likelihood of integer classes under row softmax.

    logits: (..., K); classes: integer array broadcastable to the leading
    shape. `weights`, when given, weights rows and normalizes by their sum.
    """
    _check_finite(logits)
    classes = np.asarray(classes, dtype=np.int64)
    logp = log_softmax(logits, axis=-1)
    flat = logp.reshape(-1, logits.shape[-1])
    rows = np.arange(flat.shape[0])
    picked = flat[rows, classes.reshape(-1)]
    if weights is None:
        return -picked.mean()
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    denom = max(w.sum(), 1e-12)
    return -(picked * Tensor(w)).sum() * (1.0 / denom)


def binary_cross_entropy(logits: Tensor, targets, weights=None) -> Tensor:
    """Mean BCE with logits, numerically stable for large |logit|."""
    targets = targets if isinstance(targets, Tensor) else Tensor(targets)
    _check_finite(logits, targets)
    # max(l, 0) - l*t + log(1 + exp(-|l|))
    elems = logits.relu() - logits * targets + ((-logits.abs()).exp() + 1.0).log()
    if weights is None:
        return elems.mean()
    w = np.asarray(weights, dtype=np.float64)
    denom = max(w.sum(), 1e-12)
    return (elems * Tensor(w)).sum() * (1.0 / denom)


def gaussian_nll(dx: Tensor, dy: Tensor, log_sx: Tensor, log_sy: Tensor) -> Tensor:
    """Diagonal-Gaussian negative log-likelihood of residuals, constant dropped.

    0.5*(dx^2*exp(-2*log_sx) + dy^2*exp(-2*log_sy)) + log_sx + log_sy,
    summed over all elements. Log-sigmas are clamped to +-5 before
    exponentiation.
    """
    for t in (dx, dy, log_sx, log_sy):
        _check_finite(t if isinstance(t, Tensor) else Tensor(t))
    dx = dx if isinstance(dx, Tensor) else Tensor(dx)
    dy = dy if isinstance(dy, Tensor) else Tensor(dy)
    log_sx = (log_sx if isinstance(log_sx, Tensor) else Tensor(log_sx)).clamp(-LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
    log_sy = (log_sy if isinstance(log_sy, Tensor) else Tensor(log_sy)).clamp(-LOG_SIGMA_CLAMP, LOG_SIGMA_CLAMP)
    elems = gaussian_nll_elements(dx, dy, log_sx, log_sy)
    return elems.sum()


def gaussian_nll_elements(dx: Tensor, dy: Tensor, log_sx: Tensor, log_sy: Tensor) -> Tensor:
    """Elementwise NLL terms; callers handle masking/reduction."""
    inv_vx = (log_sx * -2.0).exp()
    inv_vy = (log_sy * -2.0).exp()
    return (dx * dx * inv_vx + dy * dy * inv_vy) * 0.5 + log_sx + log_sy
