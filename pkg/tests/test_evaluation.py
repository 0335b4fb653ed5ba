import numpy as np
import pytest

from centerhead.evaluation import evaluate, match_detections, voc07_ap
from centerhead.geometry import RBox, rbox_to_chp
from centerhead.selftest import random_detections


def det(cx, cy, w=10.0, h=40.0, theta=0.0, class_id=0, score=1.0):
    return rbox_to_chp(RBox(cx, cy, w, h, theta), class_id=class_id, score=score)


def test_single_match_is_tp():
    gt = det(50, 50)
    d = det(50, 51, score=0.9)
    records, matched = match_detections({"img": [d]}, {"img": [gt]}, 0.5)
    assert records[0].is_tp
    assert matched["img"] == [True]


def test_no_double_match():
    gt = det(50, 50)
    d1 = det(50, 50.5, score=0.9)
    d2 = det(50, 51.5, score=0.8)
    records, _ = match_detections({"img": [d1, d2]}, {"img": [gt]}, 0.5)
    assert [r.is_tp for r in records] == [True, False]


def test_low_iou_is_fp_and_fn():
    gt = det(50, 50)
    d = det(80, 50, score=0.9)  # disjoint
    records, matched = match_detections({"img": [d]}, {"img": [gt]}, 0.5)
    assert not records[0].is_tp
    assert matched["img"] == [False]


def test_class_must_match():
    gt = det(50, 50, class_id=1)
    d = det(50, 50, class_id=0, score=0.9)
    records, _ = match_detections({"img": [d]}, {"img": [gt]}, 0.5)
    assert not records[0].is_tp


def test_voc07_hand_case():
    assert voc07_ap([True, False, True], 2) == pytest.approx(0.8485, abs=1e-4)


def test_voc07_trivial_cases():
    assert voc07_ap([True], 1) == 1.0
    assert voc07_ap([False, False], 3) == 0.0
    assert voc07_ap([], 0) is None


def test_perfect_detections_score_one():
    rng = np.random.default_rng(0)
    gts, dets = {}, {}
    for img in range(4):
        boxes = random_detections(rng, 5)
        gts[f"i{img}"] = [b.__class__(b.cx, b.cy, b.w, b.h, b.hx, b.hy, b.class_id, 1.0) for b in boxes]
        dets[f"i{img}"] = gts[f"i{img}"]
    report = evaluate(dets, gts)
    for t in report.thresholds:
        assert report.map_at[t] == 1.0
    assert report.bda == 1.0


def test_stern_pointing_tp_counts_for_map_not_bda():
    gt = det(50, 50, theta=0.0)
    flipped = det(50, 50, theta=180.0, score=0.9)  # same rectangle, opposite bow
    report = evaluate({"img": [flipped]}, {"img": [gt]}, thresholds=(0.5,))
    assert report.map_at[0.5] == 1.0
    assert report.bda == 0.0


def test_map_non_increasing_in_threshold():
    rng = np.random.default_rng(1)
    gts, dets = {}, {}
    for img in range(3):
        boxes = random_detections(rng, 6)
        gts[f"i{img}"] = boxes
        noisy = []
        for b in boxes:
            noisy.append(
                b.__class__(
                    b.cx + float(rng.uniform(-3, 3)),
                    b.cy + float(rng.uniform(-3, 3)),
                    b.w * float(rng.uniform(0.9, 1.1)),
                    b.h * float(rng.uniform(0.9, 1.1)),
                    b.hx,
                    b.hy,
                    b.class_id,
                    float(rng.uniform(0.2, 1.0)),
                )
            )
        dets[f"i{img}"] = noisy
    report = evaluate(dets, gts, thresholds=(0.5, 0.6, 0.7, 0.8))
    values = [report.map_at[t] for t in (0.5, 0.6, 0.7, 0.8)]
    assert values == sorted(values, reverse=True)


def test_ap_invariant_under_monotone_rescale():
    rng = np.random.default_rng(2)
    gts = {"i": random_detections(rng, 6)}
    dets = {
        "i": [
            b.__class__(
                b.cx + float(rng.uniform(-4, 4)),
                b.cy,
                b.w,
                b.h,
                b.hx,
                b.hy,
                b.class_id,
                float(rng.uniform(0.1, 0.9)),
            )
            for b in gts["i"]
        ]
    }
    base = evaluate(dets, gts, thresholds=(0.5,))
    squashed = {
        "i": [
            b.__class__(b.cx, b.cy, b.w, b.h, b.hx, b.hy, b.class_id, b.score**3)
            for b in dets["i"]
        ]
    }
    again = evaluate(squashed, gts, thresholds=(0.5,))
    assert base.map_at[0.5] == pytest.approx(again.map_at[0.5], abs=1e-12)


def test_duplicates_never_raise_ap():
    rng = np.random.default_rng(3)
    gts = {"i": random_detections(rng, 5)}
    dets = {"i": [d for d in gts["i"]]}
    base = evaluate(dets, gts, thresholds=(0.5,))
    doubled = {"i": dets["i"] + dets["i"]}
    again = evaluate(doubled, gts, thresholds=(0.5,))
    for t in (0.5,):
        assert again.map_at[t] <= base.map_at[t] + 1e-12


def test_permutation_deterministic():
    rng = np.random.default_rng(4)
    gts = {"a": random_detections(rng, 5), "b": random_detections(rng, 4)}
    dets = {
        img: [
            b.__class__(b.cx + 1.0, b.cy, b.w, b.h, b.hx, b.hy, b.class_id, float(rng.uniform(0, 1)))
            for b in boxes
        ]
        for img, boxes in gts.items()
    }
    base = evaluate(dets, gts)
    shuffled = {img: list(reversed(boxes)) for img, boxes in dets.items()}
    again = evaluate(shuffled, gts)
    assert base.map_at == again.map_at
    assert base.counts == again.counts
    assert base.bda == again.bda


def test_counts_consistent():
    rng = np.random.default_rng(5)
    gts = {"i": random_detections(rng, 8)}
    dets = {"i": random_detections(rng, 10)}
    report = evaluate(dets, gts, thresholds=(0.5,))
    n_gt_per_class = {}
    for b in gts["i"]:
        n_gt_per_class[b.class_id] = n_gt_per_class.get(b.class_id, 0) + 1
    for class_id, (tp, fp, fn) in report.counts[0.5].items():
        assert tp + fn == n_gt_per_class.get(class_id, 0)
        assert tp >= 0 and fp >= 0 and fn >= 0


def test_detection_only_class_excluded_from_map():
    gt = det(50, 50, class_id=0)
    stray = det(120, 120, class_id=1, score=0.9)
    good = det(50, 50, class_id=0, score=0.8)
    report = evaluate({"i": [stray, good]}, {"i": [gt]}, thresholds=(0.5,))
    assert report.per_class_ap[0.5][1] is None
    assert report.map_at[0.5] == 1.0
    assert report.counts[0.5][1] == (0, 1, 0)
