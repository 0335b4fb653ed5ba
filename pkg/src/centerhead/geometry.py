"""Oriented-box representations, conversions between them, and rotated IoU.

Conventions used across the package:

* image coordinates: x grows to the right, y grows downward (raster order);
* a box heading (``theta``) is measured in degrees, clockwise from
  image-up, range ``[0, 360)`` -- ``theta = 0`` means the bow points to
  the top of the image, ``theta = 90`` to the right;
* a quad is a ``(4, 2)`` float array of corners in clockwise screen
  order starting at the front-left (port bow) corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChpBox",
    "RBox",
    "chp_to_rbox",
    "rbox_to_chp",
    "rbox_to_quad",
    "quad_to_rbox",
    "rotated_iou",
    "rotated_iou_raster",
    "angle_diff",
]


@dataclass(frozen=True)
class ChpBox:
    """A ship as center, size and head (bow) point.

    ``w`` is the short (beam) side, ``h`` the long bow-to-stern side, both
    in pixels.  ``(hx, hy)`` marks the bow; the line from center to head
    defines the heading, which gives the representation its full 360
    degree range and lets it tell bow from stern.
    """

    cx: float
    cy: float
    w: float
    h: float
    hx: float
    hy: float
    class_id: int = 0
    score: float = 1.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if self.hx == self.cx and self.hy == self.cy:
            raise ValueError("zero-length heading: head point coincides with center")

    @property
    def heading(self) -> float:
        """Heading in degrees, clockwise from image-up, in [0, 360)."""
        return math.degrees(math.atan2(self.hx - self.cx, self.cy - self.hy)) % 360.0


@dataclass(frozen=True)
class RBox:
    """Rotated rectangle ``(cx, cy, w, h, theta)`` with theta in [0, 360)."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")
        if not 0.0 <= self.theta < 360.0:
            raise ValueError(f"theta must lie in [0, 360), got {self.theta}")


def chp_to_rbox(b: ChpBox) -> RBox:
    """Convert a center/head box to a rotated rectangle.

    The heading is the direction of the center-to-head line.  Raises
    ``ValueError`` when the head point coincides with the center.
    """
    dx = b.hx - b.cx
    dy = b.cy - b.hy  # positive when the head is above the center
    if dx == 0.0 and dy == 0.0:
        raise ValueError("zero-length heading: head point coincides with center")
    theta = math.degrees(math.atan2(dx, dy)) % 360.0
    return RBox(b.cx, b.cy, b.w, b.h, theta)


def rbox_to_chp(r: RBox, class_id: int = 0, score: float = 1.0) -> ChpBox:
    """Convert a rotated rectangle to a center/head box.

    The head is placed at the midpoint of the front short edge, i.e. half
    a length ahead of the center along the heading.
    """
    t = math.radians(r.theta)
    hx = r.cx + 0.5 * r.h * math.sin(t)
    hy = r.cy - 0.5 * r.h * math.cos(t)
    return ChpBox(r.cx, r.cy, r.w, r.h, hx, hy, class_id=class_id, score=score)


def rbox_to_quad(r: RBox) -> np.ndarray:
    """Corners of a rotated rectangle as a (4, 2) array.

    Order is clockwise on screen starting at the front-left corner:
    front-left, front-right, back-right, back-left.
    """
    t = math.radians(r.theta)
    # unit vector toward the bow and unit vector to starboard
    ux, uy = math.sin(t), -math.cos(t)
    rx, ry = math.cos(t), math.sin(t)
    hh, hw = 0.5 * r.h, 0.5 * r.w
    return np.array(
        [
            [r.cx + hh * ux - hw * rx, r.cy + hh * uy - hw * ry],
            [r.cx + hh * ux + hw * rx, r.cy + hh * uy + hw * ry],
            [r.cx - hh * ux + hw * rx, r.cy - hh * uy + hw * ry],
            [r.cx - hh * ux - hw * rx, r.cy - hh * uy - hw * ry],
        ],
        dtype=np.float64,
    )


def quad_to_rbox(q: np.ndarray) -> RBox:
    """Recover (cx, cy, w, h, theta) from a quad in canonical corner order."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4, 2):
        raise ValueError(f"expected a (4, 2) quad, got shape {q.shape}")
    cx, cy = q.mean(axis=0)
    w = float(np.hypot(*(q[1] - q[0])))
    h = float(np.hypot(*(q[2] - q[1])))
    front_mid = 0.5 * (q[0] + q[1])
    dx = front_mid[0] - cx
    dy = cy - front_mid[1]
    theta = math.degrees(math.atan2(dx, dy)) % 360.0
    return RBox(float(cx), float(cy), w, h, theta)


def _polygon_area(poly) -> float:
    """Absolute area of a simple polygon given as a vertex list (shoelace)."""
    n = len(poly)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return abs(acc) * 0.5


def _clip_convex(subject, clip):
    """Sutherland-Hodgman clip of convex polygon ``subject`` by ``clip``.

    Both polygons must be in positive-shoelace order (the order produced
    by :func:`rbox_to_quad`).  Points exactly on a clip edge count as
    inside, so identical polygons clip to themselves.
    """
    output = list(subject)
    cx1, cy1 = clip[-1]
    for cx2, cy2 in clip:
        if not output:
            return []
        ex, ey = cx2 - cx1, cy2 - cy1
        inputs = output
        output = []
        sx, sy = inputs[-1]
        s_in = ex * (sy - cy1) - ey * (sx - cx1) >= 0.0
        for px, py in inputs:
            p_in = ex * (py - cy1) - ey * (px - cx1) >= 0.0
            if p_in != s_in:
                # edge crosses the clip line: append the intersection
                dcx, dcy = cx1 - cx2, cy1 - cy2
                dpx, dpy = sx - px, sy - py
                den = dcx * dpy - dcy * dpx
                if abs(den) > 1e-30:
                    n1 = cx1 * cy2 - cy1 * cx2
                    n2 = sx * py - sy * px
                    output.append(((n1 * dpx - n2 * dcx) / den, (n1 * dpy - n2 * dcy) / den))
            if p_in:
                output.append((px, py))
            sx, sy, s_in = px, py, p_in
        cx1, cy1 = cx2, cy2
    return output


def rotated_iou(a: RBox, b: RBox) -> float:
    """Exact intersection-over-union of two rotated rectangles.

    Computed by convex polygon clipping of the corner quads and the
    shoelace area.  Symmetric in its arguments, and invariant under
    replacing either theta by theta + 180.  Degenerate slivers with
    intersection area below 1e-12 count as empty.
    """
    qa = [tuple(p) for p in rbox_to_quad(a)]
    qb = [tuple(p) for p in rbox_to_quad(b)]
    inter = _polygon_area(_clip_convex(qa, qb))
    if inter < 1e-12:
        return 0.0
    union = a.w * a.h + b.w * b.h - inter
    return float(min(max(inter / union, 0.0), 1.0))


def _points_in_quad(xs: np.ndarray, ys: np.ndarray, quad: np.ndarray) -> np.ndarray:
    """Vectorized convex point-in-polygon test (boundary counts as inside)."""
    inside = np.ones(np.broadcast_shapes(xs.shape, ys.shape), dtype=bool)
    for i in range(4):
        x0, y0 = quad[i]
        x1, y1 = quad[(i + 1) % 4]
        inside &= (x1 - x0) * (ys - y0) - (y1 - y0) * (xs - x0) >= 0.0
    return inside


def _window(axis: np.ndarray, lo: float, hi: float):
    return np.searchsorted(axis, lo, "left"), np.searchsorted(axis, hi, "right")


def rotated_iou_raster(a: RBox, b: RBox, grid: int = 512) -> float:
    """Brute-force IoU estimate by counting sample points on a grid.

    Samples ``grid x grid`` cell centers over the joint bounding box of
    the two rectangles.  Intended as an independent oracle for
    :func:`rotated_iou`; not meant for production use.  Each quad is only
    evaluated inside its own bounding-box window of the grid, which does
    not change the counts.
    """
    if grid < 64:
        raise ValueError(f"grid resolution must be at least 64, got {grid}")
    qa = rbox_to_quad(a)
    qb = rbox_to_quad(b)
    corners = np.vstack([qa, qb])
    x0, y0 = corners.min(axis=0)
    x1, y1 = corners.max(axis=0)
    xs = x0 + (np.arange(grid) + 0.5) * ((x1 - x0) / grid)
    ys = y0 + (np.arange(grid) + 0.5) * ((y1 - y0) / grid)

    def window_count(quads) -> int:
        lo_x = max(q[:, 0].min() for q in quads)
        hi_x = min(q[:, 0].max() for q in quads)
        lo_y = max(q[:, 1].min() for q in quads)
        hi_y = min(q[:, 1].max() for q in quads)
        jx0, jx1 = _window(xs, lo_x, hi_x)
        jy0, jy1 = _window(ys, lo_y, hi_y)
        if jx0 >= jx1 or jy0 >= jy1:
            return 0
        wx = xs[jx0:jx1][None, :]
        wy = ys[jy0:jy1][:, None]
        inside = _points_in_quad(wx, wy, quads[0])
        for q in quads[1:]:
            inside &= _points_in_quad(wx, wy, q)
        return int(np.count_nonzero(inside))

    count_a = window_count([qa])
    count_b = window_count([qb])
    count_inter = window_count([qa, qb])
    union = count_a + count_b - count_inter
    if union == 0:
        return 0.0
    return float(count_inter / union)


def angle_diff(t1: float, t2: float) -> float:
    """Minimal absolute angle difference on the full 360 degree circle.

    Bow and stern are distinct: ``angle_diff(0, 180) == 180``.
    """
    d = abs(t1 - t2) % 360.0
    return min(d, 360.0 - d)
