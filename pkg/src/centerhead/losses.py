"""Training objectives with analytic gradients.

All losses return a ``LossResult`` holding the scalar value and the exact
gradient with respect to the prediction, so they can be checked against
finite differences without any autograd framework.  Reductions run in
fixed index order for bit-reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LossConfig",
    "LossResult",
    "variant_focal_loss",
    "masked_l1_loss",
    "total_loss",
    "TOTAL_LOSS_PARTS",
]

_EPS = 1e-12

# part names accepted by total_loss, in the order they are summed
TOTAL_LOSS_PARTS = ("center", "center_offset", "size", "head_reg", "head", "head_offset")


@dataclass(frozen=True)
class LossConfig:
    """Focal-loss exponents and the weights of the summed parts."""

    gamma: float = 2.0
    beta: float = 4.0
    lambda_offset: float = 1.0
    lambda_size: float = 0.1
    lambda_head_reg: float = 1.0
    lambda_head_heatmap: float = 1.0
    lambda_head_offset: float = 1.0

    def __post_init__(self):
        if self.gamma < 0 or self.beta < 0:
            raise ValueError("gamma and beta must be non-negative")
        for name in (
            "lambda_offset",
            "lambda_size",
            "lambda_head_reg",
            "lambda_head_heatmap",
            "lambda_head_offset",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class LossResult:
    value: float
    gradient: np.ndarray


def variant_focal_loss(
    pred: np.ndarray,
    target: np.ndarray,
    n_objects: int,
    cfg: LossConfig = LossConfig(),
) -> LossResult:
    """Penalty-reduced pixelwise focal loss for keypoint heatmaps.

    Cells where the target is exactly 1 are positives; everywhere else the
    penalty is softened by (1 - target)^beta.  The loss is normalized by
    the object count, not the cell count.  Predictions are clamped to
    [1e-12, 1 - 1e-12] before the logs and the gradient is taken at the
    clamped values.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    if n_objects < 1:
        raise ValueError("no positives: n_objects must be >= 1")

    p = np.clip(pred, _EPS, 1.0 - _EPS)
    pos = target == 1.0
    neg = ~pos
    gamma, beta = cfg.gamma, cfg.beta
    n = float(n_objects)

    log_p = np.log(p)
    log_1p = np.log1p(-p)
    one_m_p = 1.0 - p

    pos_term = float(np.sum((one_m_p[pos] ** gamma) * log_p[pos]))
    soft = (1.0 - target[neg]) ** beta
    neg_term = float(np.sum(soft * (p[neg] ** gamma) * log_1p[neg]))
    value = -(pos_term + neg_term) / n

    grad = np.zeros_like(p)
    grad[pos] = -(-gamma * one_m_p[pos] ** (gamma - 1.0) * log_p[pos] + one_m_p[pos] ** gamma / p[pos]) / n
    grad[neg] = -soft * (gamma * p[neg] ** (gamma - 1.0) * log_1p[neg] - p[neg] ** gamma / one_m_p[neg]) / n
    return LossResult(value, grad)


def masked_l1_loss(pred: np.ndarray, target: np.ndarray, cells, n_objects: int) -> LossResult:
    """L1 regression loss evaluated only at the supervised cells.

    ``cells`` is a sequence of (row, col) indices; repeated cells count
    once per occurrence, matching one term per annotated object.  The
    subgradient at zero difference is 0.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    cells = list(cells)
    if not cells:
        raise ValueError("empty mask: no supervised cells")
    n = float(n_objects)

    value = 0.0
    grad = np.zeros_like(pred)
    for row, col in cells:
        diff = pred[:, row, col] - target[:, row, col]
        value += float(np.sum(np.abs(diff)))
        grad[:, row, col] += np.sign(diff) / n
    return LossResult(value / n, grad)


def total_loss(parts, cfg: LossConfig = LossConfig()) -> float:
    """Weighted sum of the six named loss parts.

    ``parts`` maps each name in ``TOTAL_LOSS_PARTS`` to a non-negative
    scalar; a missing or negative part raises ``ValueError``.
    """
    missing = [name for name in TOTAL_LOSS_PARTS if name not in parts]
    if missing:
        raise ValueError(f"missing loss parts: {', '.join(missing)}")
    values = {name: float(parts[name]) for name in TOTAL_LOSS_PARTS}
    bad = [name for name, v in values.items() if v < 0]
    if bad:
        raise ValueError(f"negative loss parts: {', '.join(bad)}")
    return (
        values["center"]
        + cfg.lambda_offset * values["center_offset"]
        + cfg.lambda_size * values["size"]
        + cfg.lambda_head_reg * values["head_reg"]
        + cfg.lambda_head_heatmap * values["head"]
        + cfg.lambda_head_offset * values["head_offset"]
    )
