"""Serialization and synthetic scenes.

Annotation files (one JSON document per image, UTF-8)::

    {
      "image_id": "scene_000",
      "width": 512, "height": 512,
      "gsd": 1.0,
      "objects": [
        {"class_name": "ticonderoga", "cx": ..., "cy": ..., "w": ..., "h": ...,
         "hx": ..., "hy": ..., "score": 0.97}          # score optional (ground truth omits it)
      ],
      "slice": {"origin_x": 0, "origin_y": 820, "slice_size": 1024, "model_size": 512,
                "source": {"image_id": ..., "width": ..., "height": ..., "gsd": ...}}   # optional
    }

Object centers must lie inside the image; head points may poke past the
edge (a bow at the rim is legal).  Class config files map class names to
mean ship lengths in meters::

    {"coeff": 0.2, "gsd": 1.0,
     "classes": [{"name": "ticonderoga", "mean_length_m": 172.8}, ...]}

Tensor files (extension ``.chpt``) are a tiny binary format: magic
``CHPT``, uint16 version (1), uint8 dtype code (0 = float32 LE), uint8
rank, rank x uint32 dims, then the row-major payload.  Round trips are
bit-exact.

All writers go through a temp file plus atomic rename, so a failed run
never leaves a half-written output.
"""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .encoding import TargetTensors
from .geometry import ChpBox, RBox, _points_in_quad, chp_to_rbox, rbox_to_chp, rbox_to_quad, rotated_iou
from .size_prior import ClassLengthTable

__all__ = [
    "AnnotationError",
    "TensorFormatError",
    "AnnotationFile",
    "SceneSpec",
    "load_annotations",
    "save_annotations",
    "load_class_table",
    "save_class_table",
    "default_class_table",
    "save_tensor",
    "load_tensor",
    "save_targets",
    "load_targets",
    "synth_scene",
    "rasterize_boxes",
    "resize_nearest",
    "atomic_write_text",
]

_MAGIC = b"CHPT"
_VERSION = 1
_TARGET_FILES = ("center", "center_offset", "size", "head_reg", "head", "head_offset")


class AnnotationError(ValueError):
    """Malformed annotation or class-config content."""


class TensorFormatError(ValueError):
    """Malformed tensor file content."""


@dataclass
class AnnotationFile:
    """One image's boxes plus the image metadata needed to interpret them."""

    image_id: str
    width: int
    height: int
    gsd: float
    objects: list = field(default_factory=list)  # (class_name, ChpBox) pairs
    slice_meta: dict | None = None
    store_scores: bool = True

    def boxes(self, table: ClassLengthTable):
        """Objects as ChpBox with class ids resolved against ``table``."""
        return [
            ChpBox(b.cx, b.cy, b.w, b.h, b.hx, b.hy, class_id=table.id_of(name), score=b.score)
            for name, b in self.objects
        ]

    @classmethod
    def from_boxes(cls, image_id, width, height, gsd, boxes, table, with_scores=True, slice_meta=None):
        objects = []
        for b in boxes:
            if not 0 <= b.class_id < table.num_classes:
                raise AnnotationError(
                    f"class id {b.class_id} has no name in the class table "
                    f"({table.num_classes} classes)"
                )
            name = table.names[b.class_id]
            score = b.score if with_scores else 1.0
            objects.append((name, ChpBox(b.cx, b.cy, b.w, b.h, b.hx, b.hy, b.class_id, score)))
        return cls(image_id, width, height, gsd, objects, slice_meta, with_scores)


def atomic_write_text(path, text: str):
    """Write text through a temp file and atomic rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_bytes(path, payload: bytes):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _require(obj, key, path, kind=None):
    if key not in obj:
        raise AnnotationError(f"{path}: {key} required")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise AnnotationError(f"{path}: field {key!r} has wrong type")
    return value


def load_annotations(path, table: ClassLengthTable | None = None) -> AnnotationFile:
    """Parse and validate an annotation file.

    When ``table`` is given, class names must resolve against it.  Parse
    errors carry the offending line; semantic errors name the field.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise AnnotationError(f"{path}: top-level value must be an object")
    image_id = _require(doc, "image_id", path, str)
    width = _require(doc, "width", path, int)
    height = _require(doc, "height", path, int)
    gsd = _require(doc, "gsd", path, (int, float))
    if width <= 0 or height <= 0:
        raise AnnotationError(f"{path}: image size must be positive")
    if gsd <= 0:
        raise AnnotationError(f"{path}: gsd must be positive")
    objects = []
    for i, rec in enumerate(_require(doc, "objects", path, list)):
        where = f"{path}: objects[{i}]"
        name = _require(rec, "class_name", where, str)
        if table is not None:
            try:
                table.id_of(name)
            except KeyError:
                raise AnnotationError(f"{where}: unknown class {name!r}") from None
        vals = {}
        for key in ("cx", "cy", "w", "h", "hx", "hy"):
            vals[key] = float(_require(rec, key, where, (int, float)))
        score = rec.get("score")
        if score is not None:
            score = float(score)
            if not 0.0 <= score <= 1.0:
                raise AnnotationError(f"{where}: score must lie in [0, 1]")
        if not (0.0 <= vals["cx"] < width and 0.0 <= vals["cy"] < height):
            raise AnnotationError(f"{where}: center outside image bounds")
        try:
            box = ChpBox(
                vals["cx"], vals["cy"], vals["w"], vals["h"], vals["hx"], vals["hy"],
                class_id=table.id_of(name) if table is not None else 0,
                score=1.0 if score is None else score,
            )
        except ValueError as exc:
            raise AnnotationError(f"{where}: {exc}") from exc
        objects.append((name, box))
    has_scores = any(rec.get("score") is not None for rec in doc["objects"])
    return AnnotationFile(image_id, width, height, float(gsd), objects, doc.get("slice"), has_scores)


def save_annotations(path, ann: AnnotationFile):
    """Serialize an annotation file with deterministic field order."""
    objects = []
    for name, b in ann.objects:
        rec = {
            "class_name": name,
            "cx": b.cx,
            "cy": b.cy,
            "w": b.w,
            "h": b.h,
            "hx": b.hx,
            "hy": b.hy,
        }
        if ann.store_scores:
            rec["score"] = b.score
        objects.append(rec)
    doc = {
        "image_id": ann.image_id,
        "width": ann.width,
        "height": ann.height,
        "gsd": ann.gsd,
        "objects": objects,
    }
    if ann.slice_meta is not None:
        doc["slice"] = ann.slice_meta
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def load_class_table(path) -> ClassLengthTable:
    """Read a class-config file into a ClassLengthTable."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from exc
    classes = _require(doc, "classes", path, list)
    names, lengths = [], []
    for i, rec in enumerate(classes):
        where = f"{path}: classes[{i}]"
        names.append(_require(rec, "name", where, str))
        lengths.append(float(_require(rec, "mean_length_m", where, (int, float))))
    try:
        return ClassLengthTable(
            tuple(names),
            tuple(lengths),
            coeff=float(doc.get("coeff", 0.2)),
            gsd=float(doc.get("gsd", 1.0)),
        )
    except ValueError as exc:
        raise AnnotationError(f"{path}: {exc}") from exc


def save_class_table(path, table: ClassLengthTable):
    doc = {
        "coeff": table.coeff,
        "gsd": table.gsd,
        "classes": [
            {"name": name, "mean_length_m": length}
            for name, length in zip(table.names, table.mean_lengths_m)
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def default_class_table() -> ClassLengthTable:
    """A small built-in table: one real cruiser class plus synthetic fillers."""
    return ClassLengthTable(
        names=("ticonderoga", "cargo_220", "patrol_60", "tug_30"),
        mean_lengths_m=(172.8, 220.0, 60.0, 30.0),
        coeff=0.2,
        gsd=1.0,
    )


def save_tensor(path, array: np.ndarray):
    """Write one array as a ``.chpt`` tensor file (float32, little-endian)."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    header = _MAGIC + struct.pack("<HBB", _VERSION, 0, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    _atomic_write_bytes(path, header + arr.tobytes())


def load_tensor(path) -> np.ndarray:
    """Read a ``.chpt`` tensor file back into a float32 array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise TensorFormatError(f"{path}: bad magic {blob[:4]!r}")
    if len(blob) < 8:
        raise TensorFormatError(f"{path}: truncated header")
    version, dtype_code, rank = struct.unpack_from("<HBB", blob, 4)
    if version != _VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}")
    if dtype_code != 0:
        raise TensorFormatError(f"{path}: unsupported dtype code {dtype_code}")
    dims_end = 8 + 4 * rank
    if len(blob) < dims_end:
        raise TensorFormatError(f"{path}: truncated dims")
    dims = struct.unpack_from(f"<{rank}I", blob, 8)
    expected = int(np.prod(dims)) * 4 if rank else 4
    payload = blob[dims_end:]
    if len(payload) != expected:
        raise TensorFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} for dims {dims}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


def save_targets(directory, targets: TargetTensors):
    """Write the six target maps (plus peak bookkeeping) into a directory."""
    os.makedirs(directory, exist_ok=True)
    for name in _TARGET_FILES:
        save_tensor(os.path.join(directory, f"{name}.chpt"), getattr(targets, name))
    save_tensor(
        os.path.join(directory, "positive_mask.chpt"),
        np.array(targets.positive_mask, dtype=np.float32).reshape(-1, 3),
    )
    save_tensor(
        os.path.join(directory, "head_peaks.chpt"),
        np.array(targets.head_peaks, dtype=np.float32).reshape(-1, 2),
    )


def load_targets(directory) -> TargetTensors:
    """Read target maps from a directory; peak bookkeeping is optional."""
    maps = {}
    for name in _TARGET_FILES:
        maps[name] = load_tensor(os.path.join(directory, f"{name}.chpt"))
    masks = {"positive_mask": [], "head_peaks": []}
    for name, width in (("positive_mask", 3), ("head_peaks", 2)):
        path = os.path.join(directory, f"{name}.chpt")
        if os.path.exists(path):
            arr = load_tensor(path).reshape(-1, width).astype(int)
            masks[name] = [tuple(row) for row in arr]
    return TargetTensors(**maps, **masks)


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of the seeded synthetic scene generator."""

    seed: int
    image_w: int = 512
    image_h: int = 512
    count_min: int = 2
    count_max: int = 8
    aspect_min: float = 3.5
    aspect_max: float = 7.0
    iou_cap: float = 0.05
    min_center_dist: float = 12.0
    max_attempts: int = 200

    def __post_init__(self):
        if self.count_min < 0 or self.count_max < self.count_min:
            raise ValueError("need 0 <= count_min <= count_max")
        if not 1.0 <= self.aspect_min <= self.aspect_max:
            raise ValueError("need 1 <= aspect_min <= aspect_max")
        if not 0.0 <= self.iou_cap <= 1.0:
            raise ValueError("iou_cap must lie in [0, 1]")


def synth_scene(spec: SceneSpec, table: ClassLengthTable, image_id: str | None = None) -> AnnotationFile:
    """Generate a random ship scene with valid, lightly-overlapping boxes.

    Per ship: a class is drawn uniformly, its length from the class's
    normal length law (truncated positive), the aspect ratio and heading
    uniformly.  Placement is rejection-sampled so boxes stay fully inside
    the image, pairwise rotated IoU stays at or below ``iou_cap`` and
    centers keep ``min_center_dist`` apart.  Deterministic per seed;
    raises if the requested count cannot be placed.
    """
    rng = np.random.default_rng(spec.seed)
    count = int(rng.integers(spec.count_min, spec.count_max + 1))
    placed, rboxes = [], []
    for ship in range(count):
        ok = False
        for _ in range(spec.max_attempts):
            class_id = int(rng.integers(0, table.num_classes))
            mean = table.mean_lengths_m[class_id]
            length_m = -1.0
            while length_m <= 1.0:
                length_m = float(rng.normal(mean, table.coeff * mean))
            h = length_m / table.gsd
            w = h / float(rng.uniform(spec.aspect_min, spec.aspect_max))
            theta = float(rng.uniform(0.0, 360.0))
            margin = 0.5 * math.hypot(w, h) + 1.0
            if 2.0 * margin >= min(spec.image_w, spec.image_h):
                continue  # ship does not fit this image at any position
            cx = float(rng.uniform(margin, spec.image_w - margin))
            cy = float(rng.uniform(margin, spec.image_h - margin))
            rbox = RBox(cx, cy, w, h, theta)
            if any(
                math.hypot(cx - r.cx, cy - r.cy) < spec.min_center_dist for r in rboxes
            ):
                continue
            if any(rotated_iou(rbox, r) > spec.iou_cap for r in rboxes):
                continue
            placed.append(rbox_to_chp(rbox, class_id=class_id))
            rboxes.append(rbox)
            ok = True
            break
        if not ok:
            raise AnnotationError(
                f"could only place {len(placed)} of {count} ships within the retry budget"
            )
    ann = AnnotationFile(
        image_id if image_id is not None else f"scene_{spec.seed:06d}",
        spec.image_w,
        spec.image_h,
        table.gsd,
        [(table.names[b.class_id], b) for b in placed],
    )
    ann.store_scores = False
    return ann


def rasterize_boxes(boxes, width: int, height: int) -> np.ndarray:
    """Fill boxes into a uint8 label image (class_id + 1), for inspection."""
    img = np.zeros((height, width), dtype=np.uint8)
    ys, xs = np.mgrid[0:height, 0:width]
    xs = xs + 0.5
    ys = ys + 0.5
    for b in boxes:
        quad = rbox_to_quad(chp_to_rbox(b))
        x0, y0 = np.floor(quad.min(axis=0)).astype(int)
        x1, y1 = np.ceil(quad.max(axis=0)).astype(int)
        x0, y0 = max(x0, 0), max(y0, 0)
        x1, y1 = min(x1, width), min(y1, height)
        if x0 >= x1 or y0 >= y1:
            continue
        inside = _points_in_quad(xs[y0:y1, x0:x1], ys[y0:y1, x0:x1], quad)
        img[y0:y1, x0:x1][inside] = b.class_id + 1
    return img


def resize_nearest(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize used by the synthetic raster path."""
    in_h, in_w = img.shape[:2]
    rows = np.minimum((np.arange(out_h) + 0.5) * in_h / out_h, in_h - 1).astype(int)
    cols = np.minimum((np.arange(out_w) + 0.5) * in_w / out_w, in_w - 1).astype(int)
    return img[rows][:, cols]
