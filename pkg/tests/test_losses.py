import math

import numpy as np
import pytest

from centerhead.losses import (
    LossConfig,
    TOTAL_LOSS_PARTS,
    masked_l1_loss,
    total_loss,
    variant_focal_loss,
)


def fd_grad(fun, x, idx, step=1e-5):
    xp = x.copy()
    xp[idx] += step
    xm = x.copy()
    xm[idx] -= step
    return (fun(xp) - fun(xm)) / (2 * step)


def rel_err(a, b, floor=1e-4):
    return abs(a - b) / max(abs(a), abs(b), floor)


def test_focal_perfect_prediction_vanishes():
    target = np.zeros((8, 8))
    target[2, 3] = 1.0
    pred = np.where(target == 1.0, 1.0 - 1e-9, 1e-9)
    assert variant_focal_loss(pred, target, 1).value < 1e-6


def test_focal_single_cell_value():
    # one positive cell predicted at 0.5: (1 - 0.5)^2 * ln 2
    res = variant_focal_loss(np.array([[0.5]]), np.array([[1.0]]), 1)
    assert res.value == pytest.approx(0.25 * math.log(2.0), abs=1e-12)


def test_focal_validates():
    with pytest.raises(ValueError, match="shape"):
        variant_focal_loss(np.zeros((2, 2)), np.zeros((3, 3)), 1)
    with pytest.raises(ValueError, match="no positives"):
        variant_focal_loss(np.zeros((2, 2)), np.zeros((2, 2)), 0)


def test_focal_gradient_matches_fd():
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        pred = rng.uniform(0.01, 0.99, size=(16, 16))
        target = rng.uniform(0.0, 0.95, size=(16, 16))
        target[rng.random((16, 16)) < 0.06] = 1.0
        n = max(int((target == 1.0).sum()), 1)
        res = variant_focal_loss(pred, target, n)
        for idx in np.ndindex(pred.shape):
            fd = fd_grad(lambda x: variant_focal_loss(x, target, n).value, pred, idx)
            worst = max(worst, rel_err(res.gradient[idx], fd))
    assert worst < 1e-4


def test_focal_monotone_in_positive_pred():
    target = np.zeros((4, 4))
    target[1, 1] = 1.0
    values = []
    for p in (0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
        pred = np.full((4, 4), 0.2)
        pred[1, 1] = p
        values.append(variant_focal_loss(pred, target, 1).value)
    assert values == sorted(values, reverse=True)


def test_l1_zero_at_match():
    pred = np.ones((2, 4, 4))
    res = masked_l1_loss(pred, pred.copy(), [(1, 2)], 1)
    assert res.value == 0.0
    assert not res.gradient.any()


def test_l1_single_cell_value():
    pred = np.zeros((2, 4, 4))
    pred[:, 2, 3] = (1.0, 2.0)
    res = masked_l1_loss(pred, np.zeros((2, 4, 4)), [(2, 3)], 1)
    assert res.value == pytest.approx(3.0)
    assert res.gradient[0, 2, 3] == 1.0
    assert res.gradient[1, 2, 3] == 1.0


def test_l1_empty_mask_rejected():
    with pytest.raises(ValueError, match="empty mask"):
        masked_l1_loss(np.zeros((2, 2, 2)), np.zeros((2, 2, 2)), [], 1)


def test_l1_duplicate_cells_count_twice():
    pred = np.zeros((2, 4, 4))
    pred[:, 1, 1] = (1.0, 0.0)
    res = masked_l1_loss(pred, np.zeros((2, 4, 4)), [(1, 1), (1, 1)], 2)
    assert res.value == pytest.approx(1.0)
    assert res.gradient[0, 1, 1] == pytest.approx(1.0)  # two sign terms / N=2


def test_l1_gradient_matches_fd_away_from_kink():
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        pred = rng.uniform(-2, 2, size=(2, 16, 16))
        gap = np.where(rng.random(pred.shape) < 0.5, -1.0, 1.0) * rng.uniform(
            0.05, 1.0, size=pred.shape
        )
        target = pred - gap  # |pred - target| >= 0.05 everywhere: no kinks near probes
        cells = sorted({(int(r), int(c)) for r, c in rng.integers(0, 16, size=(6, 2))})
        res = masked_l1_loss(pred, target, cells, len(cells))
        for ch in (0, 1):
            for r, c in cells:
                fd = fd_grad(
                    lambda x: masked_l1_loss(x, target, cells, len(cells)).value,
                    pred,
                    (ch, r, c),
                )
                worst = max(worst, rel_err(res.gradient[ch, r, c], fd))
    assert worst < 1e-4


def test_total_loss():
    zeros = dict.fromkeys(TOTAL_LOSS_PARTS, 0.0)
    assert total_loss(zeros) == 0.0
    ones = dict.fromkeys(TOTAL_LOSS_PARTS, 1.0)
    assert total_loss(ones) == pytest.approx(5.1)
    no_size = total_loss(ones, LossConfig(lambda_size=0.0))
    assert no_size == pytest.approx(5.0)


def test_total_loss_validates():
    parts = dict.fromkeys(TOTAL_LOSS_PARTS, 1.0)
    del parts["size"]
    with pytest.raises(ValueError, match="missing loss parts: size"):
        total_loss(parts)
    bad = dict.fromkeys(TOTAL_LOSS_PARTS, 1.0)
    bad["head"] = -0.5
    with pytest.raises(ValueError, match="negative"):
        total_loss(bad)


def test_total_loss_linear_in_parts():
    base = dict.fromkeys(TOTAL_LOSS_PARTS, 2.0)
    bumped = dict(base)
    bumped["head_reg"] = 3.0
    assert total_loss(bumped) - total_loss(base) == pytest.approx(1.0)
