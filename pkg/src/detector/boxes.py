"""Box geometry in continuous pixel coordinates: width = x2 - x1."""
import numpy as np

from src.core.errors import InvalidArgumentError, ShapeError
from src.models.box import Box

# exp(4) ~ 55x growth is the most a single delta may apply
DELTA_CLAMP = 4.0


def as_boxes(boxes) -> np.ndarray:
    array = np.asarray(boxes, dtype=np.float64)
    if array.size == 0:
        return array.reshape(0, 4)
    if array.ndim != 2 or array.shape[1] != 4:
        raise ShapeError(f"boxes must be Nx4, got {array.shape}")
    return array


def areas(boxes: np.ndarray) -> np.ndarray:
    return (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])


def pairwise_iou(a, b) -> np.ndarray:
    """NxM IoU matrix; pairs with zero union get IoU 0."""
    a, b = as_boxes(a), as_boxes(b)
    ix1 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy1 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix2 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy2 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(ix2 - ix1, 0, None) * np.clip(iy2 - iy1, 0, None)
    union = areas(a)[:, None] + areas(b)[None, :] - inter
    return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    return float(pairwise_iou(a.as_array()[None], b.as_array()[None])[0, 0])


def _centers(boxes: np.ndarray):
    widths = boxes[:, 2] - boxes[:, 0]
    heights = boxes[:, 3] - boxes[:, 1]
    return boxes[:, 0] + 0.5 * widths, boxes[:, 1] + 0.5 * heights, widths, heights


def encode_deltas(anchors, targets) -> np.ndarray:
    """(dx, dy, dw, dh) that move ``anchors`` onto ``targets``."""
    anchors, targets = as_boxes(anchors), as_boxes(targets)
    ax, ay, aw, ah = _centers(anchors)
    if np.any(aw <= 0) or np.any(ah <= 0):
        raise InvalidArgumentError("anchors must have positive extents")
    tx, ty, tw, th = _centers(targets)
    tw, th = np.maximum(tw, 1e-6), np.maximum(th, 1e-6)
    return np.stack([(tx - ax) / aw, (ty - ay) / ah, np.log(tw / aw), np.log(th / ah)], axis=1)


def decode_deltas(anchors, deltas, image_size: tuple[int, int] | None = None) -> np.ndarray:
    """
    Apply (dx, dy, dw, dh) to anchors.

    The center moves by (dx * w, dy * h) and the extents scale by exp(dw),
    exp(dh) with dw, dh clamped to +-4; the result is clipped to the image
    when ``image_size`` (H, W) is given.
    """
    anchors = as_boxes(anchors)
    deltas = np.asarray(deltas, dtype=np.float64).reshape(-1, 4)
    ax, ay, aw, ah = _centers(anchors)
    if np.any(aw <= 0) or np.any(ah <= 0):
        raise InvalidArgumentError("anchors must have positive extents")
    dw = np.clip(deltas[:, 2], -DELTA_CLAMP, DELTA_CLAMP)
    dh = np.clip(deltas[:, 3], -DELTA_CLAMP, DELTA_CLAMP)
    cx = ax + deltas[:, 0] * aw
    cy = ay + deltas[:, 1] * ah
    w = aw * np.exp(dw)
    h = ah * np.exp(dh)
    boxes = np.stack([cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h], axis=1)
    return clip_boxes(boxes, image_size) if image_size is not None else boxes


def clip_boxes(boxes, image_size: tuple[int, int]) -> np.ndarray:
    height, width = image_size
    boxes = as_boxes(boxes).copy()
    boxes[:, [0, 2]] = np.clip(boxes[:, [0, 2]], 0, width)
    boxes[:, [1, 3]] = np.clip(boxes[:, [1, 3]], 0, height)
    return boxes


def decode_box(anchor: Box, deltas, image_size: tuple[int, int] | None = None) -> Box:
    return Box.from_array(decode_deltas(anchor.as_array()[None], deltas, image_size)[0])
