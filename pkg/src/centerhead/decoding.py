"""Decode predicted target maps into center/head-point detections.

The test-time procedure mirrors the encoder: per-class peaks of the
center heatmap become detections; size and sub-cell offset are read at
the peak cell; the head point is first regressed from the center cell,
then snapped to the nearest sufficiently-confident head-heatmap peak and
refined by the head offset map.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .encoding import TargetTensors
from .geometry import ChpBox

__all__ = ["DecodeConfig", "Peak", "extract_peaks", "decode_detections"]


@dataclass(frozen=True)
class DecodeConfig:
    """Peak selection and head assignment thresholds."""

    top_k: int = 100
    head_score_threshold: float = 0.1
    score_floor: float = 0.0
    stride: int = 4

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        for name in ("head_score_threshold", "score_floor"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class Peak:
    """A local maximum of one heatmap channel."""

    class_id: int
    row: int
    col: int
    score: float


def extract_peaks(channel: np.ndarray, top_k: int | None = None, class_id: int = 0):
    """Cells that are >= all of their 8-connected neighbors.

    Border cells only compare against neighbors that exist, so plateaus
    (including an all-constant map) qualify everywhere.  Peaks come back
    sorted by score descending, ties broken by (row, col) ascending, and
    truncated to ``top_k`` when given.
    """
    ch = np.asarray(channel, dtype=np.float64)
    if ch.size == 0:
        return []
    padded = np.full((ch.shape[0] + 2, ch.shape[1] + 2), -np.inf)
    padded[1:-1, 1:-1] = ch
    is_peak = np.ones(ch.shape, dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            is_peak &= ch >= padded[1 + dr : 1 + dr + ch.shape[0], 1 + dc : 1 + dc + ch.shape[1]]
    rows, cols = np.nonzero(is_peak)
    scores = ch[rows, cols]
    order = np.lexsort((cols, rows, -scores))
    if top_k is not None:
        order = order[:top_k]
    return [Peak(class_id, int(rows[i]), int(cols[i]), float(scores[i])) for i in order]


def _check_shapes(t: TargetTensors):
    hw = t.center.shape[1:]
    expected = {
        "center_offset": 2,
        "size": 2,
        "head_reg": 2,
        "head": 1,
        "head_offset": 2,
    }
    for name, channels in expected.items():
        arr = getattr(t, name)
        if arr.shape != (channels, *hw):
            raise ValueError(
                f"{name} has shape {arr.shape}, expected ({channels}, {hw[0]}, {hw[1]})"
            )


def decode_detections(tensors: TargetTensors, cfg: DecodeConfig = DecodeConfig()):
    """Turn predicted maps into a list of ChpBox detections.

    Per class the ``top_k`` center peaks are kept (those scoring above
    ``score_floor``); each gets its offset-corrected center, its size and
    a two-stage head estimate.  Head candidates are the head-heatmap
    peaks scoring above ``head_score_threshold``, shared across classes
    and detections; the candidate nearest to the regressed head wins and
    is refined by the head offset map.  With no candidate at all the
    regressed head is used as-is.

    Output order is (class asc, score desc, row, col); sizes are clamped
    to a 1e-6 pixel floor and scores into [0, 1] so every emitted box is
    a valid ChpBox.
    """
    _check_shapes(tensors)
    s = float(cfg.stride)
    head_cands = [
        p for p in extract_peaks(tensors.head[0]) if p.score > cfg.head_score_threshold
    ]
    cand_pos = np.array([[p.col, p.row] for p in head_cands], dtype=np.float64)

    out = []
    for class_id in range(tensors.center.shape[0]):
        for peak in extract_peaks(tensors.center[class_id], cfg.top_k, class_id):
            if peak.score <= cfg.score_floor:
                continue
            r, c = peak.row, peak.col
            cx = (c + float(tensors.center_offset[0, r, c])) * s
            cy = (r + float(tensors.center_offset[1, r, c])) * s
            w = max(float(tensors.size[0, r, c]) * s, 1e-6)
            h = max(float(tensors.size[1, r, c]) * s, 1e-6)
            reg_x = (c + float(tensors.head_reg[0, r, c])) * s
            reg_y = (r + float(tensors.head_reg[1, r, c])) * s

            if head_cands:
                d2 = (cand_pos[:, 0] * s - reg_x) ** 2 + (cand_pos[:, 1] * s - reg_y) ** 2
                best = head_cands[int(np.argmin(d2))]
                hx = (best.col + float(tensors.head_offset[0, best.row, best.col])) * s
                hy = (best.row + float(tensors.head_offset[1, best.row, best.col])) * s
            else:
                hx, hy = reg_x, reg_y

            if hx == cx and hy == cy:
                warnings.warn(
                    f"degenerate head at ({cx}, {cy}); nudging head downward", stacklevel=2
                )
                hy = cy + 1e-6
            score = min(max(peak.score, 0.0), 1.0)
            out.append(ChpBox(cx, cy, w, h, hx, hy, class_id=class_id, score=score))
    return out
