from dataclasses import dataclass

import numpy as np

from src.core.errors import InvalidArgumentError, ShapeError
from src.detector.boxes import as_boxes, pairwise_iou
from src.models.box import Box, Detection
from src.models.feature_set import FeatureSet


@dataclass(frozen=True, eq=False)
class RegionSelection:
    """The surviving regions, best first: indices into the candidate rows."""
    indices: np.ndarray
    scores: np.ndarray
    class_ids: np.ndarray
    num_rows: int

    @property
    def mask(self) -> np.ndarray:
        mask = np.zeros(self.num_rows, dtype=bool)
        mask[:len(self.indices)] = True
        return mask

    def feature_set(self, vectors: np.ndarray, boxes: np.ndarray, image_size: tuple[int, int]) -> FeatureSet:
        """Exactly ``num_rows`` rows; rows past the survivors are zero and masked out."""
        vectors = np.asarray(vectors, dtype=np.float32)
        dim = vectors.shape[1] if vectors.ndim == 2 else 0
        rows = np.zeros((self.num_rows, dim), np.float32)
        row_boxes = np.zeros((self.num_rows, 4), np.float32)
        k = len(self.indices)
        if k:
            rows[:k] = vectors[self.indices]
            row_boxes[:k] = np.asarray(boxes)[self.indices]
        return FeatureSet.from_regions(rows, row_boxes, self.mask, image_size)

    def detections(self, boxes: np.ndarray, attribute_scores: np.ndarray | None = None) -> list[Detection]:
        out = []
        for rank, index in enumerate(self.indices):
            attrs = attribute_scores[index] if attribute_scores is not None else np.zeros(0, np.float32)
            out.append(Detection(
                box=Box.from_array(boxes[index]),
                class_id=int(self.class_ids[rank]),
                score=float(np.clip(self.scores[rank], 0.0, 1.0)),
                attribute_scores=np.asarray(attrs, dtype=np.float32),
            ))
        return out


def _greedy_keep(iou: np.ndarray, scores: np.ndarray, thresh: float) -> np.ndarray:
    """Greedy NMS over a precomputed IoU matrix; ties resolve to the lower index."""
    order = np.argsort(-scores, kind="stable")
    suppressed = np.zeros(len(scores), dtype=bool)
    keep = []
    for i in order:
        if suppressed[i]:
            continue
        keep.append(i)
        suppressed |= iou[i] > thresh
    return np.asarray(keep, dtype=np.int64)


def select_top_regions(boxes, class_scores, n: int, class_nms_iou: float, score_thresh: float = 0.0) -> RegionSelection:
    """
    Per-class NMS followed by a global top-N over regions.

    For every class, NMS runs over all candidate regions scored by that
    class's probability; a region's confidence is the best probability among
    the classes in which it survived. Regions whose confidence exceeds
    ``score_thresh`` are sorted by confidence and the first ``n`` kept.

    Args:
        boxes: R x 4 candidate boxes (one per region, class-agnostic).
        class_scores: R x C foreground class probabilities.
        n (int): Rows in the output (N).
        class_nms_iou (float): Per-class NMS threshold.
        score_thresh (float): Minimum confidence of a surviving region.

    Returns:
        RegionSelection: At most n survivors, describing an n-row output.
    """
    if n < 1:
        raise InvalidArgumentError(f"N must be >= 1, got {n}")
    boxes = as_boxes(boxes)
    class_scores = np.asarray(class_scores, dtype=np.float64)
    if class_scores.ndim != 2 or len(class_scores) != len(boxes):
        raise ShapeError(f"class scores {class_scores.shape} do not match {len(boxes)} boxes")
    regions = len(boxes)
    if regions == 0:
        return RegionSelection(np.zeros(0, np.int64), np.zeros(0), np.zeros(0, np.int64), n)
    iou = pairwise_iou(boxes, boxes)
    max_conf = np.zeros(regions)
    best_class = np.zeros(regions, dtype=np.int64)
    for c in range(class_scores.shape[1]):
        scores = class_scores[:, c]
        keep = _greedy_keep(iou, scores, class_nms_iou)
        better = scores[keep] > max_conf[keep]
        max_conf[keep[better]] = scores[keep[better]]
        best_class[keep[better]] = c
    candidates = np.flatnonzero(max_conf > score_thresh)
    order = candidates[np.argsort(-max_conf[candidates], kind="stable")][:n]
    return RegionSelection(order, max_conf[order], best_class[order], n)
