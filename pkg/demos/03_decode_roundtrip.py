"""
Decoding, and the encode/decode round trip
==========================================

The decoder mirrors the encoder: per-class heatmap peaks become
detections, offsets undo the stride quantization, and the head point is
regressed first, then snapped to the nearest confident head-heatmap
peak.  On encoder-produced maps the round trip recovers every box
essentially exactly, which is the backbone-free correctness check used
throughout the test suite.
"""

from centerhead import (
    DecodeConfig,
    EncodingConfig,
    SceneSpec,
    angle_diff,
    chp_to_rbox,
    decode_detections,
    default_class_table,
    encode_targets,
    evaluate,
    rotated_iou,
    synth_scene,
)

table = default_class_table()
cfg = EncodingConfig(num_classes=table.num_classes, input_w=512, input_h=512)

ann = synth_scene(SceneSpec(seed=11, count_min=5, count_max=5), table)
gt = ann.boxes(table)
dets = decode_detections(encode_targets(gt, cfg), DecodeConfig())
print(f"{len(gt)} ships in, {len(dets)} detections out "
      "(extras are low-score ridge artifacts, ranked last)")

for g in gt:
    best = max(
        (d for d in dets if d.class_id == g.class_id),
        key=lambda d: rotated_iou(chp_to_rbox(d), chp_to_rbox(g)),
    )
    print(
        f"  {table.names[g.class_id]:<12} IoU {rotated_iou(chp_to_rbox(best), chp_to_rbox(g)):.4f}"
        f"  heading error {angle_diff(best.heading, g.heading):.2e} deg"
        f"  score {best.score:.2f}"
    )

report = evaluate({"demo": dets}, {"demo": gt}, thresholds=(0.5, 0.8))
print("mAP@0.5 =", report.map_at[0.5], " mAP@0.8 =", report.map_at[0.8], " BDA =", report.bda)
