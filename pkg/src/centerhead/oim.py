"""Actively rotating filters and oriented-response pooling as numpy kernels.

A filter bank of shape (k, k, N) is instantiated at N equally spaced
clockwise rotations; rotation i turns the grid by i * 360/N degrees and
cyclically relabels the orientation channels by i.  Convolving an
N-channel feature map with all instantiations yields an N-channel output
whose channels respond to rotated versions of the same pattern; a
pixelwise max over channels (``orpool``) then discards the orientation.

These kernels exist to verify the algebra (equivariance, gradients) at
desk scale, not to train networks: everything is dense float64 with
same-padding only.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "rotate_filter",
    "arf_convolve",
    "arf_convolve_grad",
    "orpool",
    "orpool_grad",
    "rotation_operator",
]


@lru_cache(maxsize=64)
def _rotation_operator_cached(k: int, theta_centi: int) -> np.ndarray:
    theta = theta_centi / 100.0
    c = (k - 1) / 2.0
    quarter = round(theta / 90.0)
    if abs(theta - 90.0 * quarter) < 1e-9:
        # grid-exact: pure index permutation
        op = np.zeros((k * k, k * k))
        q = quarter % 4
        for row in range(k):
            for col in range(k):
                x, y = col - c, row - c
                for _ in range(q):
                    x, y = y, -x  # backward quarter turn: sample where the value came from
                src_col, src_row = int(round(x + c)), int(round(y + c))
                op[row * k + col, src_row * k + src_col] = 1.0
        return op
    t = math.radians(theta)
    cos_t, sin_t = math.cos(t), math.sin(t)
    op = np.zeros((k * k, k * k))
    for row in range(k):
        for col in range(k):
            x, y = col - c, row - c
            # sample the source at the backward-rotated position
            sx = cos_t * x + sin_t * y
            sy = -sin_t * x + cos_t * y
            gx, gy = sx + c, sy + c
            x0, y0 = int(math.floor(gx)), int(math.floor(gy))
            fx, fy = gx - x0, gy - y0
            for dy, wy in ((0, 1.0 - fy), (1, fy)):
                for dx, wx in ((0, 1.0 - fx), (1, fx)):
                    sr, sc = y0 + dy, x0 + dx
                    if 0 <= sr < k and 0 <= sc < k and wx * wy != 0.0:
                        op[row * k + col, sr * k + sc] += wx * wy
    return op


def rotation_operator(k: int, theta: float) -> np.ndarray:
    """Linear operator rotating a flattened k x k grid clockwise by theta.

    Multiples of 90 degrees are exact index permutations; anything else
    uses bilinear interpolation with zero outside the grid.  The adjoint
    (transpose) of the returned matrix back-propagates through the
    rotation.
    """
    if k < 1 or k % 2 == 0:
        raise ValueError(f"filter size must be odd and positive, got {k}")
    return _rotation_operator_cached(k, int(round((theta % 360.0) * 100)))


def rotate_filter(weights: np.ndarray, i: int) -> np.ndarray:
    """The i-th rotated instantiation of a (k, k, N) filter bank.

    Spatially rotates every channel clockwise by i * 360/N degrees and
    cyclically shifts the orientation channels by i, so output channel n
    holds the rotated input channel (n - i) mod N.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 3 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected (k, k, N) weights, got shape {w.shape}")
    k, _, n_orient = w.shape
    if not 0 <= i < n_orient:
        raise ValueError(f"rotation index {i} out of range [0, {n_orient})")
    op = rotation_operator(k, i * 360.0 / n_orient)
    out = np.empty_like(w)
    for n in range(n_orient):
        out[:, :, n] = (op @ w[:, :, (n - i) % n_orient].reshape(-1)).reshape(k, k)
    return out


def _windows(arr: np.ndarray, k: int) -> np.ndarray:
    """Zero-padded sliding k x k windows of an (H, W, N) map: (H, W, N, k, k)."""
    pad = k // 2
    padded = np.pad(arr, ((pad, pad), (pad, pad), (0, 0)))
    return np.lib.stride_tricks.sliding_window_view(padded, (k, k), axis=(0, 1))


def arf_convolve(feature: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Same-padding convolution of an N-channel map with all N rotations.

    Output channel i is the sum over orientation channels n of the 2-D
    correlation of input channel n with channel n of the i-th rotated
    filter.  With N = 1 this is an ordinary single-channel correlation.
    """
    feat = np.asarray(feature, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if feat.ndim != 3:
        raise ValueError(f"expected (H, W, N) feature map, got shape {feat.shape}")
    n_orient = w.shape[2] if w.ndim == 3 else -1
    if feat.shape[2] != n_orient:
        raise ValueError(
            f"channel mismatch: feature has {feat.shape[2]} channels, filter {n_orient}"
        )
    k = w.shape[0]
    wins = _windows(feat, k)
    out = np.empty_like(feat)
    for i in range(n_orient):
        out[:, :, i] = np.einsum("hwnij,ijn->hw", wins, rotate_filter(w, i))
    return out


def arf_convolve_grad(feature: np.ndarray, weights: np.ndarray, upstream: np.ndarray):
    """Gradients of sum(upstream * arf_convolve(feature, weights)).

    Returns ``(grad_feature, grad_weights)``.  The weight gradient folds
    each rotated instantiation's gradient back through the transpose of
    the rotation operator and the inverse channel shift.
    """
    feat = np.asarray(feature, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    up = np.asarray(upstream, dtype=np.float64)
    if up.shape != feat.shape:
        raise ValueError(f"upstream shape {up.shape} must match feature shape {feat.shape}")
    k, _, n_orient = w.shape
    wins = _windows(feat, k)

    grad_w = np.zeros_like(w)
    grad_f = np.zeros_like(feat)
    up_wins = _windows(up, k)
    for i in range(n_orient):
        rot = rotate_filter(w, i)
        # d/d(rotated filter): correlate input windows with the upstream channel
        grad_rot = np.einsum("hwnij,hw->ijn", wins, up[:, :, i])
        op_t = rotation_operator(k, i * 360.0 / n_orient).T
        for m in range(n_orient):
            grad_w[:, :, m] += (op_t @ grad_rot[:, :, (m + i) % n_orient].reshape(-1)).reshape(k, k)
        # d/d(input): full correlation of upstream with the flipped kernel
        grad_f += np.einsum("hwij,ijn->hwn", up_wins[:, :, i], rot[::-1, ::-1, :])
    return grad_f, grad_w


def orpool(feature: np.ndarray) -> np.ndarray:
    """Pixelwise maximum over orientation channels."""
    feat = np.asarray(feature, dtype=np.float64)
    if feat.ndim != 3 or feat.shape[2] < 1:
        raise ValueError(f"expected (H, W, N) feature map, got shape {feat.shape}")
    return feat.max(axis=2)


def orpool_grad(feature: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Gradient of sum(upstream * orpool(feature)).

    The gradient routes to the argmax channel; ties go to the lowest
    channel index.
    """
    feat = np.asarray(feature, dtype=np.float64)
    up = np.asarray(upstream, dtype=np.float64)
    if up.shape != feat.shape[:2]:
        raise ValueError(f"upstream shape {up.shape} must match map shape {feat.shape[:2]}")
    grad = np.zeros_like(feat)
    idx = feat.argmax(axis=2)
    np.put_along_axis(grad, idx[:, :, None], up[:, :, None], axis=2)
    return grad
