"""Greedy non-maximum suppression with rotated-box IoU."""

from __future__ import annotations

from .geometry import chp_to_rbox, rotated_iou

__all__ = ["rotated_nms", "rotated_nms_indices"]


def _rank_key(det):
    return (-det.score, det.class_id, det.cx, det.cy)


def rotated_nms_indices(detections, iou_threshold: float, class_agnostic: bool = False):
    """Indices (into ``detections``) kept by greedy rotated NMS.

    Detections are visited by score descending (ties by class then
    center); each kept box suppresses later ones whose rotated IoU with
    it exceeds the threshold.  Unless ``class_agnostic`` is set,
    suppression only applies within a class.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must lie in [0, 1], got {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: _rank_key(detections[i]))
    rboxes = [chp_to_rbox(d) for d in detections]
    kept = []
    suppressed = [False] * len(detections)
    for pos, i in enumerate(order):
        if suppressed[i]:
            continue
        kept.append(i)
        for j in order[pos + 1 :]:
            if suppressed[j]:
                continue
            if not class_agnostic and detections[j].class_id != detections[i].class_id:
                continue
            if rotated_iou(rboxes[i], rboxes[j]) > iou_threshold:
                suppressed[j] = True
    return kept


def rotated_nms(detections, iou_threshold: float, class_agnostic: bool = False):
    """Greedy rotated NMS returning the surviving detections.

    The output is the score-ordered subsequence of the input selected by
    :func:`rotated_nms_indices`; input order does not matter.
    """
    return [detections[i] for i in rotated_nms_indices(detections, iou_threshold, class_agnostic)]
