import math

import numpy as np
import pytest

from asyncplan import nn
from asyncplan.nn.tensor import Tensor


def test_gaussian_nll_spec_values():
    zero = Tensor(0.0)
    assert nn.gaussian_nll(zero, zero, zero, zero).item() == 0.0
    assert nn.gaussian_nll(Tensor(1.0), zero, zero, zero).item() == 0.5


def test_gaussian_nll_clamps_log_sigma():
    big = Tensor(np.array(12.0), requires_grad=True)
    out = nn.gaussian_nll(Tensor(1.0), Tensor(0.0), big, Tensor(0.0))
    # exp(-2 * 5) applied, not exp(-2 * 12)
    assert out.item() == pytest.approx(0.5 * math.exp(-10.0) + 5.0)


def test_cross_entropy_uniform_logits():
    logits = Tensor(np.zeros(3))
    assert nn.cross_entropy(logits.reshape(1, 3), [1]).item() == pytest.approx(math.log(3.0))
    logits4 = Tensor(np.zeros((2, 4)))
    assert nn.cross_entropy(logits4, [0, 3]).item() == pytest.approx(math.log(4.0))


def test_cross_entropy_grad():
    rng = np.random.default_rng(0)
    logits = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    classes = np.array([0, 2, 1, 1])

    def loss():
        return nn.cross_entropy(logits, classes)

    loss().backward()
    analytic = logits.grad.copy()
    eps = 1e-6
    flat = logits.data.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        f1 = loss().item()
        flat[i] = orig - eps
        f0 = loss().item()
        flat[i] = orig
        assert abs((f1 - f0) / (2 * eps) - analytic.ravel()[i]) < 1e-7


def test_binary_cross_entropy_stable_and_correct():
    logits = Tensor(np.array([0.0, 50.0, -50.0]))
    targets = np.array([0.5, 1.0, 0.0])
    out = nn.binary_cross_entropy(logits, targets)
    expected = np.mean([math.log(2.0), 0.0, 0.0])
    assert out.item() == pytest.approx(expected, abs=1e-12)


def test_l1_and_non_finite_rejection():
    assert nn.l1(Tensor([1.0, -2.0]), [0.0, 0.0]).item() == pytest.approx(1.5)
    with pytest.raises(ValueError):
        nn.l1(Tensor([float("nan")]), [0.0])


def test_adamw_zero_grad_zero_decay_no_change():
    p = nn.Parameter(np.array([1.0, 2.0]))
    opt = nn.AdamW({"p": p}, lr=1e-2, weight_decay=0.0)
    p.grad = np.zeros(2)
    opt.step()
    assert p.data.tolist() == [1.0, 2.0]


def test_adamw_quadratic_convergence():
    p = nn.Parameter(np.array(4.0))
    opt = nn.AdamW({"p": p}, lr=5e-2, weight_decay=0.0)
    for _ in range(500):
        opt.zero_grad()
        loss = (p - 1.5) ** 2.0
        loss.backward()
        opt.step()
    assert p.data == pytest.approx(1.5, abs=1e-3)


def test_warmup_cosine_schedule_endpoints():
    p = nn.Parameter(np.zeros(1))
    opt = nn.AdamW({"p": p}, lr=1e-4, warmup_steps=100, total_steps=1000)
    assert opt.lr_at(0) == 0.0
    assert opt.lr_at(100) == pytest.approx(1e-4)
    assert opt.lr_at(50) == pytest.approx(5e-5)
    assert opt.lr_at(1000) == pytest.approx(0.0, abs=1e-18)
    # cosine midpoint
    assert opt.lr_at(550) == pytest.approx(5e-5)


def test_decoupled_weight_decay():
    p = nn.Parameter(np.array([10.0]))
    opt = nn.AdamW({"p": p}, lr=1e-2, weight_decay=0.1)
    p.grad = np.zeros(1)
    opt.step()
    assert p.data[0] == pytest.approx(10.0 * (1.0 - 1e-2 * 0.1))


def test_grad_check_pure_linear_l1():
    rng = np.random.default_rng(1)
    linear = nn.Linear(4, 3, rng)
    x = Tensor(rng.normal(size=(5, 4)))
    target = rng.normal(size=(5, 3))

    err = nn.grad_check(lambda: nn.l1(linear(x), target), linear.parameters())
    assert err < 1e-7


def test_grad_check_subsampling():
    rng = np.random.default_rng(2)
    linear = nn.Linear(6, 6, rng)
    x = Tensor(rng.normal(size=(2, 6)))
    err = nn.grad_check(
        lambda: (linear(x) ** 2.0).sum(), linear.parameters(),
        max_entries_per_param=5, rng=np.random.default_rng(0))
    assert err < 1e-6
