"""
VOC07 evaluation with bow-direction accuracy
============================================

A synthetic multi-scene corpus is corrupted in controlled ways (jitter,
missed ships, a stern/bow flip, false alarms) and scored: 11-point AP
per class over IoU thresholds 0.5-0.8, plus the fraction of true
positives whose heading error stays under 10 degrees (BDA).  A flipped
bow costs nothing in mAP -- the rectangle is identical -- but shows up
immediately in BDA; that asymmetry is the whole point of the metric.
"""

import numpy as np

from centerhead import (
    ChpBox,
    SceneSpec,
    chp_to_rbox,
    default_class_table,
    evaluate,
    rbox_to_chp,
    synth_scene,
)
from centerhead.evaluation import format_report

rng = np.random.default_rng(0)
table = default_class_table()

gts, dets = {}, {}
for seed in range(20):
    ann = synth_scene(SceneSpec(seed=seed), table)
    gt = ann.boxes(table)
    noisy = []
    for i, b in enumerate(gt):
        if rng.random() < 0.08:
            continue  # miss ~8% of ships
        r = chp_to_rbox(b)
        jittered = rbox_to_chp(
            type(r)(
                r.cx + float(rng.normal(0, 1.5)),
                r.cy + float(rng.normal(0, 1.5)),
                r.w * float(rng.uniform(0.92, 1.08)),
                r.h * float(rng.uniform(0.95, 1.05)),
                (r.theta + float(rng.normal(0, 2.0))) % 360.0,
            ),
            class_id=b.class_id,
            score=float(rng.uniform(0.55, 0.99)),
        )
        if rng.random() < 0.05:  # occasionally report the stern as the bow
            flipped = chp_to_rbox(jittered)
            jittered = rbox_to_chp(
                type(flipped)(flipped.cx, flipped.cy, flipped.w, flipped.h,
                              (flipped.theta + 180.0) % 360.0),
                class_id=b.class_id,
                score=jittered.score,
            )
        noisy.append(jittered)
    # a couple of false alarms per scene
    for _ in range(int(rng.integers(0, 3))):
        noisy.append(
            ChpBox(
                float(rng.uniform(50, 460)), float(rng.uniform(50, 460)),
                8.0, 40.0,
                float(rng.uniform(50, 460)), float(rng.uniform(50, 460)),
                class_id=int(rng.integers(0, table.num_classes)),
                score=float(rng.uniform(0.05, 0.5)),
            )
        )
    gts[ann.image_id] = gt
    dets[ann.image_id] = noisy

report = evaluate(dets, gts)
print(format_report(report, table.names))
