"""VOC07-style detection evaluation plus bow-direction accuracy.

Detections and ground truth are given per image (a mapping from image id
to lists of ChpBox).  Matching follows the usual greedy protocol in
global score order; AP uses the 11-point interpolation; mAP is the
unweighted mean over classes that appear in the ground truth.  Heading
enters only through the bow-direction accuracy (BDA): the fraction of
true positives whose heading error is below 10 degrees -- IoU alone
cannot tell bow from stern.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import angle_diff, chp_to_rbox, rotated_iou

__all__ = [
    "MatchRecord",
    "EvalReport",
    "match_detections",
    "voc07_ap",
    "evaluate",
    "pr_curve",
    "format_report",
    "report_to_dict",
]

BDA_MAX_ERROR_DEG = 10.0


@dataclass(frozen=True)
class MatchRecord:
    """One detection in global rank order with its match outcome."""

    image_id: str
    det: object
    is_tp: bool
    gt: object  # matched ground-truth box, or None for a false positive


@dataclass
class EvalReport:
    """Per-class AP per IoU threshold, mAP, BDA and TP/FP/FN counts."""

    thresholds: tuple
    per_class_ap: dict  # threshold -> {class_id: ap or None}
    map_at: dict  # threshold -> mAP
    bda: float
    bda_iou: float
    counts: dict  # threshold -> {class_id: (tp, fp, fn)}
    n_gt: dict  # class_id -> ground-truth count


def _ranked_detections(dets_by_image):
    flat = []
    for image_id, dets in dets_by_image.items():
        flat.extend((image_id, d) for d in dets)
    flat.sort(key=lambda r: (-r[1].score, r[0], r[1].class_id, r[1].cx, r[1].cy))
    return flat


def match_detections(dets_by_image, gts_by_image, iou_threshold: float):
    """Greedy TP/FP labeling of detections against ground truth.

    Detections are processed in score-descending order (ties by image id,
    class, center).  A detection is a true positive when its best-IoU
    still-unmatched same-class ground truth in the same image exceeds the
    threshold; that ground truth is then consumed.  Returns the rank-ordered
    list of :class:`MatchRecord` and a per-image list of matched flags
    aligned with ``gts_by_image`` (unmatched entries are the false
    negatives).
    """
    gt_matched = {img: [False] * len(gts) for img, gts in gts_by_image.items()}
    records = []
    for image_id, det in _ranked_detections(dets_by_image):
        gts = gts_by_image.get(image_id, [])
        flags = gt_matched.setdefault(image_id, [False] * len(gts))
        det_rbox = chp_to_rbox(det)
        best_iou, best_idx = 0.0, -1
        for gi, gt in enumerate(gts):
            if flags[gi] or gt.class_id != det.class_id:
                continue
            iou = rotated_iou(det_rbox, chp_to_rbox(gt))
            if iou > best_iou:
                best_iou, best_idx = iou, gi
        if best_idx >= 0 and best_iou > iou_threshold:
            flags[best_idx] = True
            records.append(MatchRecord(image_id, det, True, gts[best_idx]))
        else:
            records.append(MatchRecord(image_id, det, False, None))
    return records, gt_matched


def voc07_ap(tp_flags, n_gt: int):
    """11-point interpolated average precision.

    ``tp_flags`` are the TP/FP labels of one class's detections in rank
    order.  Returns ``None`` when there is no ground truth for the class
    (the class is then excluded from mAP).
    """
    if n_gt == 0:
        return None
    tp = fp = 0
    precisions, recalls = [], []
    for flag in tp_flags:
        if flag:
            tp += 1
        else:
            fp += 1
        precisions.append(tp / (tp + fp))
        recalls.append(tp / n_gt)
    ap = 0.0
    for i in range(11):
        r = i / 10.0
        best = 0.0
        for prec, rec in zip(precisions, recalls):
            if rec >= r and prec > best:
                best = prec
        ap += best
    return ap / 11.0


def pr_curve(records, class_id: int, n_gt: int):
    """(score, precision, recall) triples for one class in rank order."""
    points = []
    tp = fp = 0
    for rec in records:
        if rec.det.class_id != class_id:
            continue
        if rec.is_tp:
            tp += 1
        else:
            fp += 1
        recall = tp / n_gt if n_gt else 0.0
        points.append((rec.det.score, tp / (tp + fp), recall))
    return points


def evaluate(dets_by_image, gts_by_image, thresholds=(0.5, 0.6, 0.7, 0.8), bda_iou: float = 0.5):
    """Full evaluation: AP per class and threshold, mAP, BDA, counts.

    BDA is computed over the true positives of a dedicated matching pass
    at ``bda_iou``; with zero true positives it is reported as 0.
    """
    n_gt = {}
    for gts in gts_by_image.values():
        for gt in gts:
            n_gt[gt.class_id] = n_gt.get(gt.class_id, 0) + 1
    det_classes = {
        d.class_id for dets in dets_by_image.values() for d in dets
    }
    all_classes = sorted(set(n_gt) | det_classes)

    per_class_ap, map_at, counts = {}, {}, {}
    for thr in thresholds:
        records, gt_matched = match_detections(dets_by_image, gts_by_image, thr)
        aps, cls_counts = {}, {}
        for class_id in all_classes:
            flags = [r.is_tp for r in records if r.det.class_id == class_id]
            gt_count = n_gt.get(class_id, 0)
            aps[class_id] = voc07_ap(flags, gt_count)
            tp = sum(flags)
            fp = len(flags) - tp
            cls_counts[class_id] = (tp, fp, gt_count - tp)
        per_class_ap[thr] = aps
        counts[thr] = cls_counts
        present = [ap for ap in aps.values() if ap is not None]
        map_at[thr] = sum(present) / len(present) if present else 0.0

    bda_records, _ = match_detections(dets_by_image, gts_by_image, bda_iou)
    tps = [r for r in bda_records if r.is_tp]
    if tps:
        good = sum(
            1
            for r in tps
            if angle_diff(r.det.heading, r.gt.heading) < BDA_MAX_ERROR_DEG
        )
        bda = good / len(tps)
    else:
        bda = 0.0
    return EvalReport(tuple(thresholds), per_class_ap, map_at, bda, bda_iou, counts, n_gt)


def format_report(report: EvalReport, class_names=None) -> str:
    """Plain-text rendering of an evaluation report."""

    def name(cid):
        if class_names is not None and 0 <= cid < len(class_names):
            return class_names[cid]
        return f"class{cid}"

    lines = []
    header = ["class"] + [f"AP@{t:g}" for t in report.thresholds] + ["gt"]
    lines.append("  ".join(f"{h:>12}" for h in header))
    classes = sorted({c for aps in report.per_class_ap.values() for c in aps})
    for cid in classes:
        row = [name(cid)]
        for t in report.thresholds:
            ap = report.per_class_ap[t][cid]
            row.append("-" if ap is None else f"{ap:.4f}")
        row.append(str(report.n_gt.get(cid, 0)))
        lines.append("  ".join(f"{v:>12}" for v in row))
    lines.append(
        "  ".join(
            f"{v:>12}"
            for v in ["mAP"] + [f"{report.map_at[t]:.4f}" for t in report.thresholds] + [""]
        )
    )
    lines.append(f"BDA@{report.bda_iou:g}: {report.bda:.4f} (heading error < {BDA_MAX_ERROR_DEG:g} deg)")
    return "\n".join(lines)


def report_to_dict(report: EvalReport, class_names=None) -> dict:
    """JSON-friendly rendering of an evaluation report."""

    def name(cid):
        if class_names is not None and 0 <= cid < len(class_names):
            return class_names[cid]
        return f"class{cid}"

    return {
        "thresholds": list(report.thresholds),
        "map_at": {f"{t:g}": report.map_at[t] for t in report.thresholds},
        "per_class_ap": {
            f"{t:g}": {name(c): ap for c, ap in sorted(report.per_class_ap[t].items())}
            for t in report.thresholds
        },
        "counts": {
            f"{t:g}": {
                name(c): {"tp": tp, "fp": fp, "fn": fn}
                for c, (tp, fp, fn) in sorted(report.counts[t].items())
            }
            for t in report.thresholds
        },
        "bda": report.bda,
        "bda_iou": report.bda_iou,
        "n_gt": {name(c): n for c, n in sorted(report.n_gt.items())},
    }
