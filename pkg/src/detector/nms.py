import numpy as np

from src.core.errors import InvalidArgumentError, ShapeError
from src.detector.boxes import areas, as_boxes


def nms(boxes, scores, iou_thresh: float) -> np.ndarray:
    """
    Greedy non-maximum suppression.

    Boxes are visited by descending score (equal scores by lower index); a box
    is dropped when its IoU with an already kept box exceeds ``iou_thresh``.

    Returns:
        np.ndarray: Kept indices in descending score order.
    """
    boxes = as_boxes(boxes)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if len(boxes) != len(scores):
        raise ShapeError(f"nms got {len(boxes)} boxes but {len(scores)} scores")
    if not 0.0 <= iou_thresh <= 1.0:
        raise InvalidArgumentError(f"nms threshold must lie in [0, 1], got {iou_thresh}")
    order = np.argsort(-scores, kind="stable")
    box_areas = areas(boxes)
    keep = []
    while order.size:
        i = order[0]
        keep.append(i)
        rest = order[1:]
        ix1 = np.maximum(boxes[i, 0], boxes[rest, 0])
        iy1 = np.maximum(boxes[i, 1], boxes[rest, 1])
        ix2 = np.minimum(boxes[i, 2], boxes[rest, 2])
        iy2 = np.minimum(boxes[i, 3], boxes[rest, 3])
        inter = np.clip(ix2 - ix1, 0, None) * np.clip(iy2 - iy1, 0, None)
        union = box_areas[i] + box_areas[rest] - inter
        overlap = np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)
        order = rest[overlap <= iou_thresh]
    return np.asarray(keep, dtype=np.int64)


def batched_nms(boxes, scores, labels, iou_thresh: float) -> np.ndarray:
    """NMS run independently per label; kept indices sorted by descending score."""
    boxes = as_boxes(boxes)
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    keep = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        keep.extend(members[nms(boxes[members], scores[members], iou_thresh)])
    keep = np.sort(np.asarray(keep, dtype=np.int64))
    return keep[np.argsort(-scores[keep], kind="stable")]
