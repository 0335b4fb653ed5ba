"""Command-line pipelines over annotation and tensor files.

Stages communicate through files only, so each one is independently
testable and scriptable::

    centerhead synth  --seed 7 --out gt.json
    centerhead encode --ann gt.json --out-dir maps/
    centerhead decode --tensors maps/ --out dets.json
    centerhead refine --in dets.json --out refined.json
    centerhead eval   --dets refined.json --gt gt.json --out-prefix report

Every run echoes its resolved configuration to stderr; stdout carries
only the command's payload (if any).  Exit status is 0 on success, 1 on
any processing error, 2 on usage errors.  The default class config can
be pointed at a file via the ``CENTERHEAD_CLASS_CONFIG`` environment
variable; otherwise a small built-in table is used.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import dataio, selftest
from .decoding import DecodeConfig, decode_detections
from .encoding import EncodingConfig, encode_targets
from .evaluation import evaluate, format_report, pr_curve, match_detections, report_to_dict
from .geometry import RBox, rotated_iou
from .nms import rotated_nms_indices
from .size_prior import refine_scores
from .tiling import make_slices, merge_detections, slice_annotations

ENV_CLASS_CONFIG = "CENTERHEAD_CLASS_CONFIG"


def _echo_config(args, keys):
    resolved = {k: getattr(args, k) for k in keys}
    print(
        "config: " + " ".join(f"{k}={v}" for k, v in sorted(resolved.items())),
        file=sys.stderr,
    )


def _class_table(args):
    path = getattr(args, "classes", None) or os.environ.get(ENV_CLASS_CONFIG)
    if path:
        return dataio.load_class_table(path)
    return dataio.default_class_table()


def _parse_rbox(text: str) -> RBox:
    parts = text.split(",")
    if len(parts) != 5:
        raise ValueError(f"expected cx,cy,w,h,theta, got {text!r}")
    cx, cy, w, h, theta = (float(p) for p in parts)
    return RBox(cx, cy, w, h, theta % 360.0)


def _load_annotation_set(path, table):
    """A file or a directory of files, keyed by image id."""
    paths = []
    if os.path.isdir(path):
        paths = sorted(
            os.path.join(path, p) for p in os.listdir(path) if p.endswith(".json")
        )
    else:
        paths = [path]
    out = {}
    for p in paths:
        ann = dataio.load_annotations(p, table)
        if ann.image_id in out:
            raise dataio.AnnotationError(f"{p}: duplicate image id {ann.image_id!r}")
        out[ann.image_id] = ann
    return out


def cmd_synth(args):
    table = _class_table(args)
    spec = dataio.SceneSpec(
        seed=args.seed,
        image_w=args.width,
        image_h=args.height,
        count_min=args.count_min,
        count_max=args.count_max,
        aspect_min=args.aspect_min,
        aspect_max=args.aspect_max,
        iou_cap=args.iou_cap,
    )
    ann = dataio.synth_scene(spec, table, image_id=args.image_id)
    dataio.save_annotations(args.out, ann)
    print(f"wrote {args.out} ({len(ann.objects)} objects)", file=sys.stderr)


def cmd_encode(args):
    table = _class_table(args)
    ann = dataio.load_annotations(args.ann, table)
    cfg = EncodingConfig(
        num_classes=table.num_classes,
        input_w=ann.width,
        input_h=ann.height,
        stride=args.stride,
        alpha=args.alpha,
        gaussian_min_overlap=args.min_overlap,
    )
    targets = encode_targets(ann.boxes(table), cfg)
    dataio.save_targets(args.out_dir, targets)
    print(f"wrote {args.out_dir} ({len(targets.positive_mask)} objects)", file=sys.stderr)


def cmd_decode(args):
    table = _class_table(args)
    targets = dataio.load_targets(args.tensors)
    cfg = DecodeConfig(
        top_k=args.top_k,
        head_score_threshold=args.head_thresh,
        score_floor=args.score_floor,
        stride=args.stride,
    )
    dets = decode_detections(targets, cfg)
    map_h, map_w = targets.map_shape
    image_id = args.image_id or os.path.basename(os.path.normpath(args.tensors))
    ann = dataio.AnnotationFile.from_boxes(
        image_id, map_w * args.stride, map_h * args.stride, args.gsd, dets, table
    )
    dataio.save_annotations(args.out, ann)
    print(f"wrote {args.out} ({len(dets)} detections)", file=sys.stderr)


def cmd_nms(args):
    table = _class_table(args)
    ann = dataio.load_annotations(args.infile, table)
    boxes = ann.boxes(table)
    kept = rotated_nms_indices(boxes, args.iou, args.class_agnostic)
    if args.print_indices:
        print(json.dumps(kept))
    out = dataio.AnnotationFile(
        ann.image_id,
        ann.width,
        ann.height,
        ann.gsd,
        [ann.objects[i] for i in kept],
        ann.slice_meta,
        ann.store_scores,
    )
    dataio.save_annotations(args.out, out)
    print(f"kept {len(kept)} of {len(boxes)} detections", file=sys.stderr)


def cmd_refine(args):
    table = _class_table(args)
    ann = dataio.load_annotations(args.infile, table)
    if args.coeff is not None:
        from dataclasses import replace

        table = replace(table, coeff=args.coeff)
    refined = refine_scores(ann.boxes(table), table)
    out = dataio.AnnotationFile.from_boxes(
        ann.image_id, ann.width, ann.height, ann.gsd, refined, table
    )
    dataio.save_annotations(args.out, out)
    print(f"wrote {args.out} ({len(refined)} detections)", file=sys.stderr)


def cmd_tile_slice(args):
    table = _class_table(args)
    ann = dataio.load_annotations(args.ann, table)
    slices = make_slices(ann.width, ann.height, args.slice_size, args.stride, args.model_size)
    boxes = ann.boxes(table)
    per_slice = slice_annotations(boxes, slices)
    os.makedirs(args.out_dir, exist_ok=True)
    source = {
        "image_id": ann.image_id,
        "width": ann.width,
        "height": ann.height,
        "gsd": ann.gsd,
    }
    for spec, slice_boxes in zip(slices, per_slice):
        meta = {
            "origin_x": spec.origin_x,
            "origin_y": spec.origin_y,
            "slice_size": spec.slice_size,
            "model_size": spec.model_size,
            "source": source,
        }
        name = f"{ann.image_id}_x{spec.origin_x}_y{spec.origin_y}"
        out = dataio.AnnotationFile.from_boxes(
            name,
            spec.model_size,
            spec.model_size,
            ann.gsd * spec.slice_size / spec.model_size,
            slice_boxes,
            table,
            with_scores=ann.store_scores,
            slice_meta=meta,
        )
        dataio.save_annotations(os.path.join(args.out_dir, f"{name}.json"), out)
    print(f"wrote {len(slices)} slices to {args.out_dir}", file=sys.stderr)


def cmd_tile_merge(args):
    from .tiling import SliceSpec

    table = _class_table(args)
    files = sorted(
        os.path.join(args.in_dir, p) for p in os.listdir(args.in_dir) if p.endswith(".json")
    )
    if not files:
        raise dataio.AnnotationError(f"no slice files in {args.in_dir}")
    per_slice, source = [], None
    for path in files:
        ann = dataio.load_annotations(path, table)
        meta = ann.slice_meta
        if meta is None:
            raise dataio.AnnotationError(f"{path}: missing slice metadata")
        spec = SliceSpec(
            meta["origin_x"], meta["origin_y"], meta["slice_size"], meta["model_size"]
        )
        per_slice.append((spec, ann.boxes(table)))
        source = meta["source"]
    merged = merge_detections(per_slice, args.rnms, args.class_agnostic)
    out = dataio.AnnotationFile.from_boxes(
        source["image_id"], source["width"], source["height"], source["gsd"], merged, table
    )
    dataio.save_annotations(args.out, out)
    print(f"merged {len(files)} slices into {len(merged)} detections", file=sys.stderr)


def cmd_eval(args):
    table = _class_table(args)
    dets = {
        img: ann.boxes(table) for img, ann in _load_annotation_set(args.dets, table).items()
    }
    gts = {
        img: ann.boxes(table) for img, ann in _load_annotation_set(args.gt, table).items()
    }
    thresholds = tuple(float(t) for t in args.thresholds.split(","))
    report = evaluate(dets, gts, thresholds, bda_iou=args.bda_iou)
    text = format_report(report, table.names)
    print(text)
    dataio.atomic_write_text(args.out_prefix + ".txt", text + "\n")
    payload = json.dumps(report_to_dict(report, table.names), indent=2) + "\n"
    dataio.atomic_write_text(args.out_prefix + ".json", payload)
    records, _ = match_detections(dets, gts, args.bda_iou)
    for class_id, n in sorted(report.n_gt.items()):
        rows = ["score,precision,recall"]
        rows += [f"{s:.6f},{p:.6f},{r:.6f}" for s, p, r in pr_curve(records, class_id, n)]
        dataio.atomic_write_text(
            f"{args.out_prefix}_pr_{table.names[class_id]}.csv", "\n".join(rows) + "\n"
        )
    print(f"wrote {args.out_prefix}.txt/.json and PR curves", file=sys.stderr)


def cmd_iou(args):
    a = _parse_rbox(args.a)
    b = _parse_rbox(args.b)
    print(f"{rotated_iou(a, b):.17g}")


def cmd_selftest(args):
    results = selftest.run_all(fast=not args.full)
    ok = True
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    if not ok:
        raise RuntimeError("selftest failed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centerhead",
        description="Center/head-point oriented ship detection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_classes(p):
        p.add_argument("--classes", help="class config JSON (default: env or built-in table)")

    p = sub.add_parser("synth", help="generate a synthetic annotated scene")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--count-min", type=int, default=2)
    p.add_argument("--count-max", type=int, default=8)
    p.add_argument("--aspect-min", type=float, default=3.5)
    p.add_argument("--aspect-max", type=float, default=7.0)
    p.add_argument("--iou-cap", type=float, default=0.05)
    p.add_argument("--image-id", default=None)
    add_classes(p)
    p.set_defaults(func=cmd_synth, echo=["seed", "width", "height", "count_min", "count_max", "iou_cap"])

    p = sub.add_parser("encode", help="encode annotations into target maps")
    p.add_argument("--ann", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--alpha", type=float, default=1.2)
    p.add_argument("--min-overlap", type=float, default=0.7)
    add_classes(p)
    p.set_defaults(func=cmd_encode, echo=["ann", "stride", "alpha", "min_overlap"])

    p = sub.add_parser("decode", help="decode target maps into detections")
    p.add_argument("--tensors", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--head-thresh", type=float, default=0.1)
    p.add_argument("--score-floor", type=float, default=0.0)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--gsd", type=float, default=1.0)
    p.add_argument("--image-id", default=None)
    add_classes(p)
    p.set_defaults(func=cmd_decode, echo=["tensors", "top_k", "head_thresh", "score_floor", "stride"])

    p = sub.add_parser("nms", help="rotated non-maximum suppression")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--iou", type=float, default=0.15)
    p.add_argument("--class-agnostic", action="store_true")
    p.add_argument("--print-indices", action="store_true", help="print kept indices as JSON")
    add_classes(p)
    p.set_defaults(func=cmd_nms, echo=["infile", "iou", "class_agnostic"])

    p = sub.add_parser("refine", help="rescore detections with the length prior")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--coeff", type=float, default=None, help="override the table's variance coefficient")
    add_classes(p)
    p.set_defaults(func=cmd_refine, echo=["infile", "coeff"])

    p = sub.add_parser("tile", help="slice/merge geometry for large images")
    tile_sub = p.add_subparsers(dest="tile_command", required=True)

    ps = tile_sub.add_parser("slice", help="cut annotations into model-frame slices")
    ps.add_argument("--ann", required=True)
    ps.add_argument("--out-dir", required=True)
    ps.add_argument("--slice-size", type=int, default=1024)
    ps.add_argument("--stride", type=int, default=820)
    ps.add_argument("--model-size", type=int, default=512)
    add_classes(ps)
    ps.set_defaults(func=cmd_tile_slice, echo=["ann", "slice_size", "stride", "model_size"])

    pm = tile_sub.add_parser("merge", help="merge slice detections back into the source frame")
    pm.add_argument("--in-dir", required=True)
    pm.add_argument("--out", required=True)
    pm.add_argument("--rnms", type=float, default=0.15)
    pm.add_argument("--class-agnostic", action="store_true")
    add_classes(pm)
    pm.set_defaults(func=cmd_tile_merge, echo=["in_dir", "rnms", "class_agnostic"])

    p = sub.add_parser("eval", help="VOC07 mAP and bow-direction accuracy")
    p.add_argument("--dets", required=True, help="detection file or directory")
    p.add_argument("--gt", required=True, help="ground-truth file or directory")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--thresholds", default="0.5,0.6,0.7,0.8")
    p.add_argument("--bda-iou", type=float, default=0.5)
    add_classes(p)
    p.set_defaults(func=cmd_eval, echo=["dets", "gt", "thresholds", "bda_iou"])

    p = sub.add_parser("iou", help="rotated IoU of two box literals cx,cy,w,h,theta")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_iou, echo=["a", "b"])

    p = sub.add_parser("selftest", help="run the built-in oracle suites")
    p.add_argument("--full", action="store_true", help="larger sample counts")
    p.set_defaults(func=cmd_selftest, echo=["full"])

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _echo_config(args, args.echo)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - single CLI error boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
