import logging

import numpy as np

from src.core.errors import InvalidArgumentError
from src.detector.boxes import pairwise_iou
from src.models.box import Detection, GroundTruth

logger = logging.getLogger(__name__)


def average_precision(recall: np.ndarray, precision: np.ndarray) -> float:
    """Area under the PR curve with all-points interpolation."""
    r = np.concatenate([[0.0], recall, [1.0]])
    p = np.concatenate([[0.0], precision, [0.0]])
    p = np.maximum.accumulate(p[::-1])[::-1]
    steps = np.flatnonzero(r[1:] != r[:-1])
    return float(((r[steps + 1] - r[steps]) * p[steps + 1]).sum())


def evaluate_detection_ap(detections: list[list[Detection]], ground_truth: list[GroundTruth],
                          iou_thresh: float = 0.5) -> dict:
    """
    Per-class average precision over a set of images.

    Detections of a class are visited by descending score across all images;
    each matches the unmatched ground-truth box of that class with the highest
    IoU if it reaches ``iou_thresh``, otherwise it is a false positive.
    Classes without ground truth are skipped.

    Args:
        detections: Per-image detections.
        ground_truth: Per-image annotations, aligned with ``detections``.
        iou_thresh (float): Matching threshold in (0, 1).

    Returns:
        dict: ``{"per_class": {class_id: ap}, "mean": mAP}``.
    """
    if not 0.0 < iou_thresh < 1.0:
        raise InvalidArgumentError(f"IoU threshold must lie in (0, 1), got {iou_thresh}")
    if len(detections) != len(ground_truth):
        raise InvalidArgumentError(f"{len(detections)} detection lists for {len(ground_truth)} images")
    classes = sorted({int(c) for gt in ground_truth for c in gt.class_ids})
    per_class: dict[int, float] = {}
    for c in classes:
        gt_boxes = [gt.boxes[gt.class_ids == c] for gt in ground_truth]
        total = sum(len(b) for b in gt_boxes)
        candidates = [(d.score, i, d.box.as_array()) for i, dets in enumerate(detections) for d in dets if d.class_id == c]
        candidates.sort(key=lambda item: -item[0])
        matched = [np.zeros(len(b), dtype=bool) for b in gt_boxes]
        tp = np.zeros(len(candidates))
        for k, (_, image, box) in enumerate(candidates):
            if len(gt_boxes[image]) == 0:
                continue
            overlaps = pairwise_iou(box[None], gt_boxes[image])[0]
            overlaps[matched[image]] = -1.0
            best = int(overlaps.argmax())
            if overlaps[best] >= iou_thresh:
                tp[k] = 1
                matched[image][best] = True
        if not candidates:
            per_class[c] = 0.0
            continue
        cum_tp = np.cumsum(tp)
        recall = cum_tp / total
        precision = cum_tp / np.arange(1, len(candidates) + 1)
        per_class[c] = average_precision(recall, precision)
    mean = float(np.mean(list(per_class.values()))) if per_class else 0.0
    logger.info(f"Detection mAP@{iou_thresh}: {mean:.4f} over {len(per_class)} classes")
    return {"per_class": per_class, "mean": mean}
