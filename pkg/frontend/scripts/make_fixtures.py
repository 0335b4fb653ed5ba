"""Generate the shared parity fixture corpus from the native library.

Inputs and expected outputs land in frontend/fixtures/; the TypeScript
tests replay the inputs through the bindings and compare against the
expectations at 1e-9.  Run from anywhere:

    python3 frontend/scripts/make_fixtures.py
"""

import json
import os
import sys

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(os.path.dirname(ROOT), "src"))

from centerhead.dataio import save_targets  # noqa: E402
from centerhead.decoding import DecodeConfig, decode_detections  # noqa: E402
from centerhead.encoding import EncodingConfig, encode_targets  # noqa: E402
from centerhead.evaluation import evaluate, report_to_dict  # noqa: E402
from centerhead.geometry import ChpBox, RBox, rbox_to_chp, rotated_iou  # noqa: E402
from centerhead.nms import rotated_nms_indices  # noqa: E402
from centerhead.size_prior import ClassLengthTable, refine_scores  # noqa: E402

FIXTURES = os.path.join(ROOT, "fixtures")


def row(box: ChpBox):
    return [box.cx, box.cy, box.w, box.h, box.hx, box.hy, box.class_id, box.score]


def random_boxes(rng, n, num_classes=3, span=400.0):
    boxes = []
    for _ in range(n):
        r = RBox(
            float(rng.uniform(40, span)),
            float(rng.uniform(40, span)),
            float(rng.uniform(6, 24)),
            float(rng.uniform(24, 90)),
            float(rng.uniform(0, 360)),
        )
        boxes.append(
            rbox_to_chp(
                r,
                class_id=int(rng.integers(0, num_classes)),
                score=float(rng.uniform(0.05, 1.0)),
            )
        )
    return boxes


def iou_fixture():
    rng = np.random.default_rng(0)
    cases = [
        {"a": [0, 0, 10, 100, 0], "b": [0, 0, 10, 100, 5]},
        {"a": [0, 0, 2, 2, 0], "b": [1, 0, 2, 2, 0]},
        {"a": [0, 0, 2, 2, 0], "b": [30, 0, 2, 2, 0]},
        {"a": [5, 5, 4, 20, 45], "b": [5, 5, 4, 20, 225]},
    ]
    for _ in range(8):
        cases.append(
            {
                "a": [
                    float(rng.uniform(-20, 20)),
                    float(rng.uniform(-20, 20)),
                    float(rng.uniform(2, 40)),
                    float(rng.uniform(2, 120)),
                    float(rng.uniform(0, 360)),
                ],
                "b": [
                    float(rng.uniform(-20, 20)),
                    float(rng.uniform(-20, 20)),
                    float(rng.uniform(2, 40)),
                    float(rng.uniform(2, 120)),
                    float(rng.uniform(0, 360)),
                ],
            }
        )
    for case in cases:
        case["expected"] = rotated_iou(RBox(*case["a"]), RBox(*case["b"]))
    return cases


def nms_fixture():
    rng = np.random.default_rng(1)
    boxes = random_boxes(rng, 20, span=250.0)
    cases = []
    for thr in (0.0, 0.15, 0.5, 1.0):
        for agnostic in (False, True):
            cases.append(
                {
                    "iouThreshold": thr,
                    "classAgnostic": agnostic,
                    "keptIndices": rotated_nms_indices(boxes, thr, agnostic),
                }
            )
    return {"boxes": [row(b) for b in boxes], "cases": cases}


def encode_decode_fixture():
    rng = np.random.default_rng(2)
    boxes = []
    while len(boxes) < 5:
        cand = random_boxes(rng, 1, span=200.0)[0]
        if all(
            np.hypot(cand.cx - b.cx, cand.cy - b.cy) > 40 for b in boxes
        ):
            boxes.append(cand)
    cfg = EncodingConfig(num_classes=3, input_w=256, input_h=256)
    gt = [ChpBox(b.cx, b.cy, b.w, b.h, b.hx, b.hy, b.class_id, 1.0) for b in boxes]
    targets = encode_targets(gt, cfg)
    save_targets(os.path.join(FIXTURES, "encode_expected"), targets)
    dets = decode_detections(targets, DecodeConfig())
    return {
        "imageW": 256,
        "imageH": 256,
        "numClasses": 3,
        "stride": 4,
        "boxes": [row(b) for b in gt],
        "expectedDetections": [row(d) for d in dets],
    }


def refine_fixture():
    rng = np.random.default_rng(3)
    boxes = random_boxes(rng, 15)
    table = ClassLengthTable(("class0", "class1", "class2"), (40.0, 80.0, 160.0), coeff=0.2, gsd=1.0)
    refined = refine_scores(boxes, table)
    return {
        "boxes": [row(b) for b in boxes],
        "meanLengths": list(table.mean_lengths_m),
        "coeff": table.coeff,
        "gsd": table.gsd,
        "expectedScores": [d.score for d in refined],
    }


def evaluate_fixture():
    rng = np.random.default_rng(4)
    gts, dets = {}, {}
    det_rows, gt_rows = [], []
    for img in range(3):
        gt = random_boxes(rng, int(rng.integers(3, 7)))
        noisy = []
        for b in gt:
            if rng.random() < 0.15:
                continue
            noisy.append(
                ChpBox(
                    b.cx + float(rng.uniform(-5, 5)),
                    b.cy + float(rng.uniform(-5, 5)),
                    b.w * float(rng.uniform(0.85, 1.15)),
                    b.h * float(rng.uniform(0.9, 1.1)),
                    b.hx,
                    b.hy,
                    b.class_id,
                    float(rng.uniform(0.2, 1.0)),
                )
            )
        noisy.extend(random_boxes(rng, int(rng.integers(0, 3))))
        gts[f"img{img}"] = gt
        dets[f"img{img}"] = noisy
        gt_rows.extend([img] + row(b) for b in gt)
        det_rows.extend([img] + row(b) for b in noisy)
    report = evaluate(dets, gts, thresholds=(0.5, 0.6, 0.7, 0.8), bda_iou=0.5)
    names = [f"class{i}" for i in range(3)]
    return {
        "numClasses": 3,
        "thresholds": [0.5, 0.6, 0.7, 0.8],
        "bdaIou": 0.5,
        "dets": det_rows,
        "gts": gt_rows,
        "expected": report_to_dict(report, names),
    }


def main():
    os.makedirs(FIXTURES, exist_ok=True)
    fixtures = {
        "iou.json": iou_fixture(),
        "nms.json": nms_fixture(),
        "encode_decode.json": encode_decode_fixture(),
        "refine.json": refine_fixture(),
        "evaluate.json": evaluate_fixture(),
    }
    for name, payload in fixtures.items():
        with open(os.path.join(FIXTURES, name), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
        print(f"wrote fixtures/{name}")


if __name__ == "__main__":
    main()
