"""Ground-truth encoding: annotations to center/head keypoint target maps.

Six maps are produced per image at output stride ``S`` (all float32):

* ``center``        (C, H/S, W/S)  per-class heatmap, rotated Gaussian per box
* ``center_offset`` (2, H/S, W/S)  sub-cell center remainder, channels (x, y)
* ``size``          (2, H/S, W/S)  (w, h) at map scale
* ``head_reg``      (2, H/S, W/S)  head minus center, at map scale
* ``head``          (1, H/S, W/S)  class-shared head heatmap, isotropic Gaussian
* ``head_offset``   (2, H/S, W/S)  sub-cell head remainder

Regression channels are only meaningful at the recorded peak cells
(``positive_mask`` for the center-anchored maps, ``head_peaks`` for
``head_offset``); everything else stays zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import ChpBox, chp_to_rbox

__all__ = [
    "EncodingConfig",
    "CovarianceKernel",
    "TargetTensors",
    "gaussian_radius",
    "covariance_kernel",
    "gaussian_covariance",
    "splat_rotated_gaussian",
    "encode_targets",
]


@dataclass(frozen=True)
class EncodingConfig:
    """Geometry of the target maps and shape of the splatted kernels."""

    num_classes: int
    input_w: int
    input_h: int
    stride: int = 4
    alpha: float = 1.2
    gaussian_min_overlap: float = 0.7

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.input_w % self.stride or self.input_h % self.stride:
            raise ValueError(
                f"input size {self.input_w}x{self.input_h} not divisible by stride {self.stride}"
            )
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.gaussian_min_overlap < 1.0:
            raise ValueError(
                f"gaussian_min_overlap must lie in (0, 1), got {self.gaussian_min_overlap}"
            )

    @property
    def map_w(self) -> int:
        return self.input_w // self.stride

    @property
    def map_h(self) -> int:
        return self.input_h // self.stride


@dataclass(frozen=True)
class CovarianceKernel:
    """A 2-D Gaussian kernel aligned to a rotated box.

    ``sqrt_matrix`` is R diag(sigma_x, sigma_y) R^T for the clockwise
    rotation R of ``theta`` degrees; ``matrix`` is its square, the actual
    covariance used when evaluating the kernel.
    """

    sigma_x: float
    sigma_y: float
    theta: float
    sqrt_matrix: np.ndarray
    matrix: np.ndarray


@dataclass
class TargetTensors:
    """The six per-image training maps plus peak bookkeeping."""

    center: np.ndarray
    center_offset: np.ndarray
    size: np.ndarray
    head_reg: np.ndarray
    head: np.ndarray
    head_offset: np.ndarray
    positive_mask: list = field(default_factory=list)  # (class_id, row, col) per box
    head_peaks: list = field(default_factory=list)  # (row, col) per box

    @property
    def map_shape(self):
        return self.center.shape[1:]


def gaussian_radius(w: float, h: float, min_overlap: float = 0.7) -> float:
    """Largest kernel radius keeping IoU >= min_overlap under a radius shift.

    The standard three-case keypoint heuristic: the tightest of the radii
    at which a corner-shifted, inscribed or circumscribed box still meets
    the overlap requirement.
    """
    b1 = h + w
    sq1 = math.sqrt(b1 * b1 - 4.0 * w * h * (1.0 - min_overlap) / (1.0 + min_overlap))
    r1 = (b1 + sq1) / 2.0

    b2 = 2.0 * (h + w)
    sq2 = math.sqrt(b2 * b2 - 16.0 * (1.0 - min_overlap) * w * h)
    r2 = (b2 + sq2) / 2.0

    a3 = 4.0 * min_overlap
    b3 = -2.0 * min_overlap * (h + w)
    sq3 = math.sqrt(b3 * b3 - 4.0 * a3 * (min_overlap - 1.0) * w * h)
    r3 = (b3 + sq3) / 2.0
    return min(r1, r2, r3)


def covariance_kernel(sigma_x: float, sigma_y: float, theta: float) -> CovarianceKernel:
    """Assemble the rotated-Gaussian kernel R diag(sx, sy) R^T."""
    if sigma_x <= 0 or sigma_y <= 0:
        raise ValueError(f"sigmas must be positive, got {sigma_x}, {sigma_y}")
    t = math.radians(theta)
    c, s = math.cos(t), math.sin(t)
    rot = np.array([[c, -s], [s, c]], dtype=np.float64)
    sqrt_matrix = rot @ np.diag([sigma_x, sigma_y]) @ rot.T
    matrix = sqrt_matrix @ sqrt_matrix
    return CovarianceKernel(sigma_x, sigma_y, theta % 360.0, sqrt_matrix, matrix)


def gaussian_covariance(
    w: float,
    h: float,
    theta: float,
    alpha: float = 1.2,
    min_overlap: float = 0.7,
) -> CovarianceKernel:
    """Kernel for a box of map-scale size (w, h) at heading ``theta``.

    The base scale sigma_p is one third of the size-adaptive radius; it is
    then stretched along the box axes in proportion to w and h.
    """
    if w <= 0 or h <= 0:
        raise ValueError(f"box dimensions must be positive, got w={w} h={h}")
    sigma_p = max(gaussian_radius(w, h, min_overlap) / 3.0, 1e-6)
    root = math.sqrt(w * h)
    sigma_x = alpha * sigma_p * w / root
    sigma_y = alpha * sigma_p * h / root
    return covariance_kernel(sigma_x, sigma_y, theta)


def splat_rotated_gaussian(channel: np.ndarray, kernel: CovarianceKernel, center) -> np.ndarray:
    """Max-merge a rotated Gaussian into ``channel`` (in place).

    ``center`` is an (x, y) position in map coordinates.  Values are
    merged with a pixelwise maximum so overlapping kernels keep the
    stronger response; the cell containing the center is set to exactly 1.
    Evaluation is truncated to the 3-sigma bounding window of the kernel.
    """
    h_map, w_map = channel.shape
    cx, cy = float(center[0]), float(center[1])
    col = int(math.floor(cx))
    row = int(math.floor(cy))
    if not (0 <= col < w_map and 0 <= row < h_map):
        raise ValueError(f"kernel center ({cx}, {cy}) outside map {w_map}x{h_map}")

    cov = kernel.matrix
    ext_x = 3.0 * math.sqrt(cov[0, 0])
    ext_y = 3.0 * math.sqrt(cov[1, 1])
    x0 = max(int(math.floor(cx - ext_x)), 0)
    x1 = min(int(math.ceil(cx + ext_x)), w_map - 1)
    y0 = max(int(math.floor(cy - ext_y)), 0)
    y1 = min(int(math.ceil(cy + ext_y)), h_map - 1)

    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    xs = np.arange(x0, x1 + 1, dtype=np.float64) - cx
    ys = np.arange(y0, y1 + 1, dtype=np.float64) - cy
    gx, gy = np.meshgrid(xs, ys)
    quad = inv[0, 0] * gx * gx + (inv[0, 1] + inv[1, 0]) * gx * gy + inv[1, 1] * gy * gy
    patch = np.exp(-0.5 * quad)
    region = channel[y0 : y1 + 1, x0 : x1 + 1]
    np.maximum(region, patch.astype(channel.dtype), out=region)
    channel[row, col] = 1.0
    return channel


def encode_targets(annotations, cfg: EncodingConfig) -> TargetTensors:
    """Encode ground-truth boxes into the six training target maps.

    Each box splats a rotated Gaussian into its class channel of the
    center heatmap and an isotropic Gaussian into the shared head heatmap;
    sub-cell offsets, map-scale size and the center-to-head vector are
    written at the box's peak cell.  Same-class boxes landing on one peak
    cell keep separate ``positive_mask`` entries but overwrite each
    other's regression targets (a warning is issued).
    """
    s = float(cfg.stride)
    mh, mw = cfg.map_h, cfg.map_w
    t = TargetTensors(
        center=np.zeros((cfg.num_classes, mh, mw), dtype=np.float32),
        center_offset=np.zeros((2, mh, mw), dtype=np.float32),
        size=np.zeros((2, mh, mw), dtype=np.float32),
        head_reg=np.zeros((2, mh, mw), dtype=np.float32),
        head=np.zeros((1, mh, mw), dtype=np.float32),
        head_offset=np.zeros((2, mh, mw), dtype=np.float32),
    )
    seen_cells = set()
    for box in annotations:
        if not isinstance(box, ChpBox):
            raise TypeError(f"expected ChpBox, got {type(box).__name__}")
        if not (0 <= box.class_id < cfg.num_classes):
            raise ValueError(f"class_id {box.class_id} out of range [0, {cfg.num_classes})")
        if not (0.0 <= box.cx < cfg.input_w and 0.0 <= box.cy < cfg.input_h):
            raise ValueError(f"annotation center ({box.cx}, {box.cy}) outside image")
        if not (0.0 <= box.hx < cfg.input_w and 0.0 <= box.hy < cfg.input_h):
            raise ValueError(f"annotation head ({box.hx}, {box.hy}) outside image")

        cx_m, cy_m = box.cx / s, box.cy / s
        w_m, h_m = box.w / s, box.h / s
        theta = chp_to_rbox(box).theta

        kernel = gaussian_covariance(w_m, h_m, theta, cfg.alpha, cfg.gaussian_min_overlap)
        splat_rotated_gaussian(t.center[box.class_id], kernel, (cx_m, cy_m))

        col, row = int(math.floor(cx_m)), int(math.floor(cy_m))
        if (box.class_id, row, col) in seen_cells:
            warnings.warn(
                f"two class-{box.class_id} boxes share peak cell ({row}, {col}); "
                "regression targets keep the last writer",
                stacklevel=2,
            )
        seen_cells.add((box.class_id, row, col))
        t.positive_mask.append((box.class_id, row, col))
        t.center_offset[0, row, col] = cx_m - col
        t.center_offset[1, row, col] = cy_m - row
        t.size[0, row, col] = w_m
        t.size[1, row, col] = h_m
        t.head_reg[0, row, col] = (box.hx - box.cx) / s
        t.head_reg[1, row, col] = (box.hy - box.cy) / s

        hx_m, hy_m = box.hx / s, box.hy / s
        sigma_p = max(gaussian_radius(w_m, h_m, cfg.gaussian_min_overlap) / 3.0, 1e-6)
        splat_rotated_gaussian(t.head[0], covariance_kernel(sigma_p, sigma_p, 0.0), (hx_m, hy_m))
        hcol, hrow = int(math.floor(hx_m)), int(math.floor(hy_m))
        t.head_peaks.append((hrow, hcol))
        t.head_offset[0, hrow, hcol] = hx_m - hcol
        t.head_offset[1, hrow, hcol] = hy_m - hrow
    return t
