import math
import random

import numpy as np
import pytest

from pairrank.objective import LossConfig, batch_loss, pairwise_loss, pairwise_loss_grad

CFG = LossConfig(lambda1=0.5, lambda2=0.5, margin=0.2, epsilon=1e-7)


def test_perfect_separation_vanishes():
    eps = CFG.epsilon
    assert pairwise_loss(1 - eps, eps, CFG) == pytest.approx(0.0, abs=1e-6)


def test_hand_value_symmetric_half():
    # -0.5(ln 0.5 + ln 0.5) + 0.5 * max(0, 0.2 - 0.5 + 0.5)
    assert pairwise_loss(0.5, 0.5, CFG) == pytest.approx(0.7931, abs=1e-4)


def test_hand_value_well_separated():
    # -0.5(ln 0.9 + ln 0.9), hinge inactive
    assert pairwise_loss(0.9, 0.1, CFG) == pytest.approx(0.10536, abs=1e-4)


def test_grad_hinge_active():
    d_yp, d_yn = pairwise_loss_grad(0.5, 0.5, CFG)
    assert d_yp == pytest.approx(-1.5)
    assert d_yn == pytest.approx(1.5)


def test_grad_hinge_inactive():
    d_yp, d_yn = pairwise_loss_grad(0.9, 0.1, CFG)
    assert d_yp == pytest.approx(-0.5 / 0.9)
    assert d_yn == pytest.approx(0.5 / 0.9)


def test_grad_matches_finite_differences():
    rnd = random.Random(17)
    h = 1e-7
    for _ in range(20):
        yp = rnd.uniform(0.05, 0.95)
        yn = rnd.uniform(0.05, 0.95)
        if abs(CFG.margin - yp + yn) < 1e-3:  # stay away from the kink
            continue
        d_yp, d_yn = pairwise_loss_grad(yp, yn, CFG)
        fd_yp = (pairwise_loss(yp + h, yn, CFG) - pairwise_loss(yp - h, yn, CFG)) / (2 * h)
        fd_yn = (pairwise_loss(yp, yn + h, CFG) - pairwise_loss(yp, yn - h, CFG)) / (2 * h)
        assert d_yp == pytest.approx(fd_yp, rel=1e-6)
        assert d_yn == pytest.approx(fd_yn, rel=1e-6)


def test_loss_nonnegative_and_gradient_signs():
    rnd = random.Random(3)
    for _ in range(2000):
        cfg = LossConfig(margin=rnd.uniform(0.01, 0.99))
        yp, yn = rnd.random(), rnd.random()
        assert pairwise_loss(yp, yn, cfg) >= 0.0
        d_yp, d_yn = pairwise_loss_grad(yp, yn, cfg)
        assert d_yp <= 0.0 and d_yn >= 0.0


def test_monotonicity():
    for yn in (0.1, 0.5, 0.9):
        losses = [pairwise_loss(yp, yn, CFG) for yp in np.linspace(0.01, 0.99, 50)]
        assert all(a >= b - 1e-12 for a, b in zip(losses, losses[1:]))
    for yp in (0.1, 0.5, 0.9):
        losses = [pairwise_loss(yp, yn, CFG) for yn in np.linspace(0.01, 0.99, 50)]
        assert all(a <= b + 1e-12 for a, b in zip(losses, losses[1:]))


def test_batch_single_equals_pairwise():
    loss, d_yp, d_yn = batch_loss([0.7], [0.3], CFG)
    assert loss == pytest.approx(pairwise_loss(0.7, 0.3, CFG))
    g = pairwise_loss_grad(0.7, 0.3, CFG)
    assert (d_yp[0], d_yn[0]) == pytest.approx(g)


def test_batch_duplicates_keep_mean():
    one, _, _ = batch_loss([0.6], [0.4], CFG)
    two, d_yp, _ = batch_loss([0.6, 0.6], [0.4, 0.4], CFG)
    assert two == pytest.approx(one)
    assert d_yp[0] == pytest.approx(pairwise_loss_grad(0.6, 0.4, CFG)[0] / 2)


def test_batch_hand_value():
    loss, _, _ = batch_loss([0.5, 0.9], [0.5, 0.1], CFG)
    assert loss == pytest.approx(0.4492, abs=1e-4)


def test_batch_length_mismatch():
    with pytest.raises(ValueError):
        batch_loss([0.5], [0.5, 0.5], CFG)
    with pytest.raises(ValueError):
        batch_loss([], [], CFG)


def test_config_validation():
    with pytest.raises(ValueError):
        LossConfig(lambda1=0.0, lambda2=0.0)
    with pytest.raises(ValueError):
        LossConfig(margin=1.5)
    with pytest.raises(ValueError):
        LossConfig(epsilon=1e-2)


def test_clamp_makes_loss_total():
    assert math.isfinite(pairwise_loss(0.0, 1.0, CFG))
