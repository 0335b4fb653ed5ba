"""Slice/merge geometry for running a fixed-GSD detector on large images.

Big scenes are cut into overlapping square slices on a regular stride;
each slice is presented to the detector at ``model_size`` resolution, so
detections come back in model coordinates and are mapped to the source
frame before a final rotated NMS removes the cross-slice duplicates.
The final row and column of slices are clamped to end exactly at the
image edge (never padded), which keeps the ground sample distance intact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .geometry import ChpBox
from .nms import rotated_nms

__all__ = [
    "SliceSpec",
    "make_slices",
    "make_axis_origins",
    "box_to_model",
    "box_to_global",
    "slice_annotations",
    "merge_detections",
]


@dataclass(frozen=True)
class SliceSpec:
    """One square slice of a source image.

    ``origin_x/origin_y`` locate the slice in source pixels; the slice is
    ``slice_size`` pixels wide and presented to the model resized to
    ``model_size``, so model coordinates are source coordinates times
    ``scale``.
    """

    origin_x: int
    origin_y: int
    slice_size: int = 1024
    model_size: int = 512

    def __post_init__(self):
        if self.slice_size < 1 or self.model_size < 1:
            raise ValueError("slice_size and model_size must be positive")
        if self.model_size > self.slice_size:
            raise ValueError(
                f"model_size {self.model_size} must not exceed slice_size {self.slice_size}"
            )
        if self.origin_x < 0 or self.origin_y < 0:
            raise ValueError("slice origins must be non-negative")

    @property
    def scale(self) -> float:
        return self.model_size / self.slice_size


def make_axis_origins(extent: int, slice_size: int, stride: int):
    """Slice origins along one axis: stride multiples, last one clamped."""
    origins = []
    x = 0
    while True:
        if x + slice_size >= extent:
            origins.append(max(0, extent - slice_size))
            break
        origins.append(x)
        x += stride
    return origins


def make_slices(
    image_w: int,
    image_h: int,
    slice_size: int = 1024,
    stride: int = 820,
    model_size: int = 512,
):
    """Regular slice grid covering the whole image.

    Origins advance by ``stride``; the final origin per axis is clamped so
    the slice ends exactly at the image edge.  Images no larger than one
    slice yield a single slice at the origin.
    """
    if image_w < 1 or image_h < 1:
        raise ValueError(f"image size must be positive, got {image_w}x{image_h}")
    if stride < 1 or stride > slice_size:
        raise ValueError(f"stride must lie in [1, slice_size], got {stride}")
    xs = make_axis_origins(image_w, slice_size, stride)
    ys = make_axis_origins(image_h, slice_size, stride)
    return [
        SliceSpec(ox, oy, slice_size, model_size) for oy in ys for ox in xs
    ]


def box_to_model(spec: SliceSpec, box: ChpBox) -> ChpBox:
    """Map a source-frame box into a slice's model coordinates."""
    s = spec.scale
    return replace(
        box,
        cx=(box.cx - spec.origin_x) * s,
        cy=(box.cy - spec.origin_y) * s,
        hx=(box.hx - spec.origin_x) * s,
        hy=(box.hy - spec.origin_y) * s,
        w=box.w * s,
        h=box.h * s,
    )


def box_to_global(spec: SliceSpec, box: ChpBox) -> ChpBox:
    """Map a model-coordinate detection back into the source frame."""
    s = spec.scale
    return replace(
        box,
        cx=spec.origin_x + box.cx / s,
        cy=spec.origin_y + box.cy / s,
        hx=spec.origin_x + box.hx / s,
        hy=spec.origin_y + box.hy / s,
        w=box.w / s,
        h=box.h / s,
    )


def slice_annotations(boxes, slices):
    """Distribute source-frame boxes onto slices, in model coordinates.

    A box lands on every slice that contains its center, so an object in
    an overlap region appears on several slices -- exactly what the
    detector sees at inference time.  Returns a list aligned with
    ``slices``.
    """
    per_slice = []
    for spec in slices:
        inside = [
            b
            for b in boxes
            if spec.origin_x <= b.cx < spec.origin_x + spec.slice_size
            and spec.origin_y <= b.cy < spec.origin_y + spec.slice_size
        ]
        per_slice.append([box_to_model(spec, b) for b in inside])
    return per_slice


def merge_detections(per_slice, rnms_threshold: float = 0.15, class_agnostic: bool = False):
    """Merge per-slice detections into source-frame detections.

    ``per_slice`` is an iterable of ``(SliceSpec, detections)`` pairs with
    detections in model coordinates.  Everything is mapped to the source
    frame, concatenated and deduplicated with rotated NMS; the result does
    not depend on the slice order.
    """
    merged = []
    for spec, dets in per_slice:
        merged.extend(box_to_global(spec, d) for d in dets)
    return rotated_nms(merged, rnms_threshold, class_agnostic)
